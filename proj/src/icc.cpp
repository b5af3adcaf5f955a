#include "gazepet/icc.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>

#include "gazepet/error.hpp"

namespace gazepet {

IccResult icc_average_fixed_raters(const std::vector<std::vector<double>>& m) {
    const std::size_t n = m.size();
    if (n < 2) throw InvalidArgument("ICC needs at least 2 targets");
    const std::size_t k = m[0].size();
    if (k < 2) throw InvalidArgument("ICC needs at least 2 raters");
    for (const auto& row : m) {
        if (row.size() != k) throw InvalidArgument("ICC matrix rows differ in length");
        for (double v : row) {
            if (!std::isfinite(v)) throw InvalidArgument("ICC matrix has a missing cell");
        }
    }
    const double dn = static_cast<double>(n), dk = static_cast<double>(k);

    std::vector<double> row_mean(n, 0.0);
    double grand = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (double v : m[i]) row_mean[i] += v;
        grand += row_mean[i];
        row_mean[i] /= dk;
    }
    grand /= dn * dk;
    double ss_rows = 0;
    for (double r : row_mean) ss_rows += (r - grand) * (r - grand);
    ss_rows *= dk;

    // Residuals from differences to the first rater: identical columns give
    // exactly zero, and per-target offsets cancel before any rounding.
    std::vector<std::vector<double>> d(n, std::vector<double>(k));
    std::vector<double> dr(n, 0.0), dc(k, 0.0);
    double dg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            d[i][j] = m[i][j] - m[i][0];
            dr[i] += d[i][j];
            dc[j] += d[i][j];
        }
        dg += dr[i];
        dr[i] /= dk;
    }
    for (double& c : dc) c /= dn;
    dg /= dn * dk;
    double ss_error = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double r = d[i][j] - dr[i] - dc[j] + dg;
            ss_error += r * r;
        }
    }

    IccResult out;
    out.n = n;
    out.k = k;
    out.ms_rows = ss_rows / (dn - 1);
    out.ms_error = ss_error / ((dn - 1) * (dk - 1));
    if (!(out.ms_rows > 0)) throw UndefinedIccError("targets do not vary; ICC is undefined");
    out.icc = (out.ms_rows - out.ms_error) / out.ms_rows;

    if (out.ms_error == 0) {
        out.ci_low = out.ci_high = 1.0;
        return out;
    }
    const double f = out.ms_rows / out.ms_error;
    const double df1 = dn - 1, df2 = (dn - 1) * (dk - 1);
    namespace bm = boost::math;
    const double q1 = bm::quantile(bm::fisher_f(df1, df2), 0.975);
    const double q2 = bm::quantile(bm::fisher_f(df2, df1), 0.975);
    out.ci_low = 1 - 1 / (f / q1);
    out.ci_high = 1 - 1 / (f * q2);
    return out;
}

}  // namespace gazepet
