#pragma once

namespace itm {

// Contents of assets/pu_curve_v1.csv, embedded at configure time.
extern const char* const kPuCurveCsv;

}  // namespace itm
