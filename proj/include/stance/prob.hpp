#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "stance/label.hpp"

namespace stance {

// A distribution over the three stance classes, indexed in canonical class
// order. Components are non-negative and sum to 1 within 1e-9.
struct ProbVector {
    std::array<double, kNumClasses> p{0.0, 0.0, 0.0};

    double operator[](std::size_t i) const { return p[i]; }
    double& operator[](std::size_t i) { return p[i]; }
    double at(Label l) const { return p[class_index(l)]; }

    // Ties broken by lowest class index.
    Label argmax() const;

    bool valid(double tol = 1e-9) const;

    friend bool operator==(const ProbVector&, const ProbVector&) = default;
};

ProbVector one_hot(Label l);

// Scales a non-negative vector so its components sum to 1. The input sum must
// be positive; tolerance checking is the caller's job.
ProbVector renormalized(const ProbVector& v);

using ProbRow = std::pair<std::string, ProbVector>;
using ProbList = std::vector<ProbRow>;

using LabelRow = std::pair<std::string, Label>;
using LabelList = std::vector<LabelRow>;

}  // namespace stance
