#pragma once

#include <cstddef>
#include <vector>

namespace gazepet {

struct IccResult {
    double icc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ms_rows = 0.0;   // between targets
    double ms_error = 0.0;  // residual
    std::size_t n = 0;      // targets
    std::size_t k = 0;      // raters
};

// Two-way mixed, average-measure, consistency ICC, i.e. ICC(3,k), with its
// F-based 95% interval. rows = targets, columns = raters.
// Throws InvalidArgument for fewer than 2 targets/raters or ragged input and
// UndefinedIccError when the targets do not vary.
IccResult icc_average_fixed_raters(const std::vector<std::vector<double>>& m);

}  // namespace gazepet
