#pragma once

#include "syncobs/machine_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace testing {

inline double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template <typename A, typename B>
double rel_err_mat(const A& a, const B& b, double floor = 1e-300) {
    return (a - b).cwiseAbs().maxCoeff() / std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), floor});
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
};

inline syncobs::MachineParams machine(syncobs::MachineKind kind) {
    syncobs::MachineParams p = syncobs::reference_wrsm();
    p.kind = kind;
    switch (kind) {
    case syncobs::MachineKind::WrsmNonSalient:
    case syncobs::MachineKind::Spmsm:
        p.Lq = p.Ld;
        break;
    default:
        break;
    }
    if (kind == syncobs::MachineKind::Ipmsm || kind == syncobs::MachineKind::Spmsm) {
        p.psi_r = 0.08;
    }
    return p;
}

} // namespace testing
