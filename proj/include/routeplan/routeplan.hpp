#ifndef ROUTEPLAN_ROUTEPLAN_HPP_
#define ROUTEPLAN_ROUTEPLAN_HPP_

#include "routeplan/accounts.hpp"
#include "routeplan/alerts.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"
#include "routeplan/render.hpp"
#include "routeplan/routing.hpp"
#include "routeplan/sample_data.hpp"
#include "routeplan/service.hpp"

#endif  // ROUTEPLAN_ROUTEPLAN_HPP_
