#include "nssafe/box.hpp"

namespace nssafe {

double interval_overlap_volume(const Interval& v, const Interval& a) {
    if (v.length() <= 0.0) {
        return a.contains(v.lo) ? 1.0 : 0.0;
    }
    double lo = v.lo > a.lo ? v.lo : a.lo;
    double hi = v.hi < a.hi ? v.hi : a.hi;
    return hi > lo ? hi - lo : 0.0;
}

}  // namespace nssafe
