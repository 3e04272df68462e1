#include "stance/prob.hpp"

#include <cmath>

namespace stance {

Label ProbVector::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumClasses; ++i)
        if (p[i] > p[best]) best = i;
    return static_cast<Label>(best);
}

bool ProbVector::valid(double tol) const {
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) return false;
        sum += v;
    }
    return std::fabs(sum - 1.0) <= tol;
}

ProbVector one_hot(Label l) {
    ProbVector v;
    v.p[class_index(l)] = 1.0;
    return v;
}

ProbVector renormalized(const ProbVector& v) {
    double sum = v.p[0] + v.p[1] + v.p[2];
    ProbVector out = v;
    for (double& x : out.p) x /= sum;
    return out;
}

}  // namespace stance
