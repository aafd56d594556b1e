#include "anaflow/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anaflow/errors.hpp"

namespace anaflow {
namespace {

double prominence(const std::vector<double>& s, std::size_t peak) {
    const double h = s[peak];
    double left_min = h;
    for (std::size_t i = peak; i-- > 0;) {
        if (s[i] > h) break;
        left_min = std::min(left_min, s[i]);
    }
    double right_min = h;
    for (std::size_t i = peak + 1; i < s.size(); ++i) {
        if (s[i] > h) break;
        right_min = std::min(right_min, s[i]);
    }
    return h - std::max(left_min, right_min);
}

}  // namespace

std::vector<std::size_t> find_peaks(const std::vector<double>& signal, double min_prominence) {
    std::vector<std::size_t> out;
    const std::size_t n = signal.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (signal[i - 1] < signal[i]) {
            std::size_t j = i;
            while (j + 1 < n && signal[j + 1] == signal[i]) ++j;
            if (j + 1 < n && signal[j + 1] < signal[i]) {
                const std::size_t mid = i + (j - i) / 2;
                if (prominence(signal, mid) >= min_prominence) out.push_back(mid);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::size_t> find_troughs(const std::vector<double>& signal, double min_prominence) {
    std::vector<double> neg(signal.size());
    std::transform(signal.begin(), signal.end(), neg.begin(), [](double v) { return -v; });
    return find_peaks(neg, min_prominence);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("linear fit needs two or more paired samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error("linear fit is degenerate: all x values are equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    if (syy > 0.0) {
        fit.r_squared = 1.0 - ss_res / syy;
    } else {
        fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
    }
    return fit;
}

PeriodStats period_stats(const std::vector<double>& peak_times) {
    if (peak_times.size() < 3) {
        throw Error("insufficient oscillation: " + std::to_string(peak_times.size()) +
                    " peak(s) found, at least 3 are needed to measure a period");
    }
    std::vector<double> periods;
    for (std::size_t i = 1; i < peak_times.size(); ++i) periods.push_back(peak_times[i] - peak_times[i - 1]);
    const auto [lo, hi] = std::minmax_element(periods.begin(), periods.end());
    PeriodStats s;
    s.mean_period = std::accumulate(periods.begin(), periods.end(), 0.0) / static_cast<double>(periods.size());
    s.variability = (*hi - *lo) / s.mean_period;
    return s;
}

}  // namespace anaflow
