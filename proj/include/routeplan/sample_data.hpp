#ifndef ROUTEPLAN_SAMPLE_DATA_HPP_
#define ROUTEPLAN_SAMPLE_DATA_HPP_

#include <string_view>

#include "routeplan/network.hpp"

namespace routeplan::sample {

// A 100 m square V1(0,0) V2(100,0) V3(100,100) V4(0,100) with the V1-V3
// diagonal. The diagonal's base_cost is left for ingestion to fill in.
inline constexpr std::string_view kSquareWithDiagonal = R"({
  "crs_label": "local-metric",
  "vertices": [
    {"id": 1, "x": 0, "y": 0, "name": "Fort"},
    {"id": 2, "x": 100, "y": 0, "name": "Kollupitiya"},
    {"id": 3, "x": 100, "y": 100, "name": "Borella"},
    {"id": 4, "x": 0, "y": 100, "name": "Maradana"}
  ],
  "segments": [
    {"id": 1, "name": "Galle Road", "from": 1, "to": 2, "geometry": [[0, 0], [100, 0]], "base_cost": 100},
    {"id": 2, "name": "Duplication Road", "from": 2, "to": 3, "geometry": [[100, 0], [100, 100]], "base_cost": 100},
    {"id": 3, "name": "Union Place", "from": 1, "to": 3, "geometry": [[0, 0], [100, 100]]},
    {"id": 4, "name": "Baseline Road", "from": 3, "to": 4, "geometry": [[100, 100], [0, 100]], "base_cost": 100},
    {"id": 5, "name": "Darley Road", "from": 4, "to": 1, "geometry": [[0, 100], [0, 0]], "base_cost": 100}
  ]
})";

inline RoadNetwork square_with_diagonal() { return ingest_network(kSquareWithDiagonal); }

}  // namespace routeplan::sample

#endif  // ROUTEPLAN_SAMPLE_DATA_HPP_
