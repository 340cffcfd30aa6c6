#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/ops.hpp"

namespace ral {

// Central finite differences against reverse-mode gradients, f64, eps 1e-5.
// Relative error uses max(1,|a|,|b|) in the denominator so tiny gradients are
// compared absolutely and large ones relatively.
template <typename MakeLoss>
double fd_max_rel_err(const std::vector<TensorT<double>>& inputs, MakeLoss make_loss,
                      double eps = 1e-5) {
    for (const auto& in : inputs) in.st()->g.clear();  // drop any stale gradients
    std::vector<std::vector<double>> ad;
    {
        TapeD tape;
        auto loss = make_loss();
        tape.backward(loss);
    }
    ad.reserve(inputs.size());
    for (const auto& in : inputs)
        ad.push_back(in.has_grad() ? in.grad_vec() : std::vector<double>(in.size(), 0.0));

    double worst = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto st = inputs[t].st();
        for (std::int64_t i = 0; i < inputs[t].size(); ++i) {
            const double orig = st->v[static_cast<std::size_t>(i)];
            st->v[static_cast<std::size_t>(i)] = orig + eps;
            const double lp = make_loss().item();
            st->v[static_cast<std::size_t>(i)] = orig - eps;
            const double lm = make_loss().item();
            st->v[static_cast<std::size_t>(i)] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double a = ad[t][static_cast<std::size_t>(i)];
            const double denom = std::max({1.0, std::abs(a), std::abs(fd)});
            worst = std::max(worst, std::abs(a - fd) / denom);
        }
    }
    return worst;
}

// Same check over a random subset of elements (for large parameter sets).
template <typename MakeLoss>
double fd_sampled_rel_err(const std::vector<TensorT<double>>& inputs, MakeLoss make_loss,
                          int samples, Rng& rng, double eps = 1e-5) {
    for (const auto& in : inputs) in.st()->g.clear();  // drop any stale gradients
    std::vector<std::vector<double>> ad;
    {
        TapeD tape;
        auto loss = make_loss();
        tape.backward(loss);
    }
    ad.reserve(inputs.size());
    for (const auto& in : inputs)
        ad.push_back(in.has_grad() ? in.grad_vec() : std::vector<double>(in.size(), 0.0));

    std::int64_t total = 0;
    for (const auto& in : inputs) total += in.size();

    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        std::int64_t flat = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(total));
        std::size_t t = 0;
        while (flat >= inputs[t].size()) {
            flat -= inputs[t].size();
            ++t;
        }
        auto st = inputs[t].st();
        const double orig = st->v[static_cast<std::size_t>(flat)];
        st->v[static_cast<std::size_t>(flat)] = orig + eps;
        const double lp = make_loss().item();
        st->v[static_cast<std::size_t>(flat)] = orig - eps;
        const double lm = make_loss().item();
        st->v[static_cast<std::size_t>(flat)] = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        const double a = ad[t][static_cast<std::size_t>(flat)];
        const double denom = std::max({1.0, std::abs(a), std::abs(fd)});
        worst = std::max(worst, std::abs(a - fd) / denom);
    }
    return worst;
}

enum class CheckKind { Op, Module, EndToEnd };

struct GradCheckEntry {
    std::string name;
    CheckKind kind;
    std::function<double(std::uint64_t seed)> run;  // returns max relative error
};

// Every differentiable op, the composite modules, and the end-to-end model.
const std::vector<GradCheckEntry>& gradcheck_suite();

struct GradcheckReport {
    struct Line {
        std::string name;
        double max_rel_err;
        double tolerance;
        bool pass;
    };
    std::vector<Line> lines;
    bool all_pass = true;
};

GradcheckReport run_gradcheck_suite(double op_tol, double module_tol, double e2e_tol,
                                    std::uint64_t seed);

}  // namespace ral
