#include "nssafe/safety.hpp"

#include <algorithm>
#include <limits>

namespace nssafe {

double unsafe_point(const std::vector<double>& values, const SafeSet& safe) {
    if (values.size() != safe.dim()) throw ShapeError("unsafe_point dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (const SafeBox& b : safe.boxes) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double gap = std::max({b.ranges[i].lo - values[i], values[i] - b.ranges[i].hi, 0.0});
            sum += gap * gap;
        }
        best = std::min(best, std::sqrt(sum));
    }
    return best;
}

}  // namespace nssafe
