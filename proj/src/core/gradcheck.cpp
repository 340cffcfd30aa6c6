#include "core/gradcheck.hpp"

#include "nn/model.hpp"

namespace ral {

namespace {

using nn::ParamStoreT;
using nn::StateRegistryT;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

TensorD randt(Rng& rng, Shape shape, double lo, double hi, bool rg = true) {
    auto t = TensorD::zeros(std::move(shape));
    for (auto& v : t.vec()) v = rng.uniform(lo, hi);
    t.set_requires_grad(rg);
    return t;
}

// |v| in [lo_abs, hi_abs] with random sign: keeps inputs away from the
// non-differentiable point of abs/relu style ops.
TensorD rand_signed(Rng& rng, Shape shape, double lo_abs, double hi_abs) {
    auto t = TensorD::zeros(std::move(shape));
    for (auto& v : t.vec()) {
        const double mag = rng.uniform(lo_abs, hi_abs);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    t.set_requires_grad(true);
    return t;
}

TensorD fixed_weights(Rng& rng, const Shape& shape) {
    auto w = TensorD::zeros(shape);
    for (auto& v : w.vec()) v = rng.uniform(-1.0, 1.0);
    return w;  // no grad: test probe only
}

TensorD weighted(const TensorD& y, const TensorD& w) { return sum_all(mul(y, w)); }

double check_binary(std::uint64_t seed, TensorD (*op)(const TensorD&, const TensorD&),
                    bool signed_inputs = false) {
    Rng rng(seed);
    auto a = signed_inputs ? rand_signed(rng, {2, 3, 4}, 0.05, 1.5) : randt(rng, {2, 3, 4}, -1.5, 1.5);
    auto b = signed_inputs ? rand_signed(rng, {2, 3, 4}, 0.05, 1.5) : randt(rng, {2, 3, 4}, -1.5, 1.5);
    auto w = fixed_weights(rng, a.shape());
    return fd_max_rel_err({a, b}, [&]() { return weighted(op(a, b), w); });
}

double check_unary(std::uint64_t seed, TensorD (*op)(const TensorD&), double lo, double hi,
                   bool signed_inputs) {
    Rng rng(seed);
    auto x = signed_inputs ? rand_signed(rng, {3, 4}, lo, hi) : randt(rng, {3, 4}, lo, hi);
    auto w = fixed_weights(rng, x.shape());
    return fd_max_rel_err({x}, [&]() { return weighted(op(x), w); });
}

}  // namespace

const std::vector<GradCheckEntry>& gradcheck_suite() {
    static const std::vector<GradCheckEntry> suite = [] {
        std::vector<GradCheckEntry> s;
        auto op = [&s](std::string name, std::function<double(std::uint64_t)> fn) {
            s.push_back({std::move(name), CheckKind::Op, std::move(fn)});
        };

        op("add", [](std::uint64_t seed) { return check_binary(seed, add<double>); });
        op("sub", [](std::uint64_t seed) { return check_binary(seed, sub<double>); });
        op("mul_elementwise", [](std::uint64_t seed) { return check_binary(seed, mul<double>); });
        op("scalar_mul", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 4}, -2.0, 2.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x}, [&]() { return weighted(scalar_mul(x, 1.7), w); });
        });
        op("abs", [](std::uint64_t seed) { return check_unary(seed, abs_<double>, 0.05, 2.0, true); });
        op("relu", [](std::uint64_t seed) { return check_unary(seed, relu<double>, 0.05, 2.0, true); });
        op("sigmoid",
           [](std::uint64_t seed) { return check_unary(seed, sigmoid<double>, -3.0, 3.0, false); });
        op("mul_scalar_tensor", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 5}, -1.0, 1.0);
            auto alpha = randt(rng, {1}, -1.0, 1.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x, alpha},
                                  [&]() { return weighted(mul_scalar_tensor(x, alpha), w); });
        });
        op("add_channel", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x4 = randt(rng, {2, 3, 4, 5}, -1.0, 1.0);
            auto b4 = randt(rng, {3}, -1.0, 1.0);
            auto w4 = fixed_weights(rng, x4.shape());
            double e = fd_max_rel_err({x4, b4}, [&]() { return weighted(add_channel(x4, b4), w4); });
            auto x3 = randt(rng, {3, 2, 2}, -1.0, 1.0);
            auto b3 = randt(rng, {3}, -1.0, 1.0);
            auto w3 = fixed_weights(rng, x3.shape());
            return std::max(e, fd_max_rel_err({x3, b3}, [&]() {
                                return weighted(add_channel(x3, b3), w3);
                            }));
        });
        op("mul_channel", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 4, 5}, -1.0, 1.0);
            auto v = randt(rng, {3}, -1.0, 1.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x, v}, [&]() { return weighted(mul_channel(x, v), w); });
        });
        op("add_row", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {4, 3}, -1.0, 1.0);
            auto b = randt(rng, {3}, -1.0, 1.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x, b}, [&]() { return weighted(add_row(x, b), w); });
        });
        op("matmul", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {3, 4}, -1.0, 1.0);
            auto b = randt(rng, {4, 2}, -1.0, 1.0);
            auto w = fixed_weights(rng, {3, 2});
            return fd_max_rel_err({a, b}, [&]() { return weighted(matmul(a, b), w); });
        });
        op("transpose2", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {3, 5}, -1.0, 1.0);
            auto w = fixed_weights(rng, {5, 3});
            return fd_max_rel_err({a}, [&]() { return weighted(transpose2(a), w); });
        });
        op("sum_all", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3}, -1.0, 1.0);
            return fd_max_rel_err({x}, [&]() { return sum_all(x); });
        });
        op("mean_all", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3}, -1.0, 1.0);
            return fd_max_rel_err({x}, [&]() { return mean_all(x); });
        });
        op("global_avg_pool", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x3 = randt(rng, {3, 2, 4}, -1.0, 1.0);
            auto w3 = fixed_weights(rng, {3});
            double e = fd_max_rel_err({x3}, [&]() { return weighted(global_avg_pool(x3), w3); });
            auto x4 = randt(rng, {2, 3, 2, 2}, -1.0, 1.0);
            auto w4 = fixed_weights(rng, {2, 3});
            return std::max(e, fd_max_rel_err({x4}, [&]() {
                                return weighted(global_avg_pool(x4), w4);
                            }));
        });
        op("mean_lastdim", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 5}, -1.0, 1.0);
            auto w = fixed_weights(rng, {3});
            return fd_max_rel_err({x}, [&]() { return weighted(mean_lastdim(x), w); });
        });
        op("reshape", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 6}, -1.0, 1.0);
            auto w = fixed_weights(rng, {3, 4});
            return fd_max_rel_err({x}, [&]() { return weighted(reshape(x, {3, 4}), w); });
        });
        op("slice0", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 2, 2}, -1.0, 1.0);
            auto w = fixed_weights(rng, {2, 2});
            return fd_max_rel_err({x}, [&]() { return weighted(slice0(x, 1), w); });
        });
        op("slice0_range", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {4, 2, 3}, -1.0, 1.0);
            auto w = fixed_weights(rng, {2, 2, 3});
            return fd_max_rel_err({x}, [&]() { return weighted(slice0_range(x, 1, 3), w); });
        });
        op("concat0", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {2, 3, 2}, -1.0, 1.0);
            auto b = randt(rng, {3, 3, 2}, -1.0, 1.0);
            auto w = fixed_weights(rng, {5, 3, 2});
            return fd_max_rel_err({a, b}, [&]() { return weighted(concat0(a, b), w); });
        });
        op("stack0", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {2, 3}, -1.0, 1.0);
            auto b = randt(rng, {2, 3}, -1.0, 1.0);
            auto c = randt(rng, {2, 3}, -1.0, 1.0);
            auto w = fixed_weights(rng, {3, 2, 3});
            return fd_max_rel_err({a, b, c}, [&]() {
                return weighted(stack0<double>({a, b, c}), w);
            });
        });
        op("slice_lastdim", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 6}, -1.0, 1.0);
            auto w = fixed_weights(rng, {2, 3, 3});
            return fd_max_rel_err({x}, [&]() { return weighted(slice_lastdim(x, 1, 4), w); });
        });
        op("flip_lastdim", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 4}, -1.0, 1.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x}, [&]() { return weighted(flip_lastdim(x), w); });
        });
        op("concat_lastdim", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {2, 3, 2}, -1.0, 1.0);
            auto b = randt(rng, {2, 3, 3}, -1.0, 1.0);
            auto w = fixed_weights(rng, {2, 3, 5});
            return fd_max_rel_err({a, b}, [&]() { return weighted(concat_lastdim(a, b), w); });
        });
        op("swap01", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 4, 2}, -1.0, 1.0);
            auto w = fixed_weights(rng, {4, 3, 2});
            return fd_max_rel_err({x}, [&]() { return weighted(swap01(x), w); });
        });
        op("chw_to_nc", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 2, 4}, -1.0, 1.0);
            auto w = fixed_weights(rng, {8, 3});
            return fd_max_rel_err({x}, [&]() { return weighted(chw_to_nc(x), w); });
        });
        op("nc_to_chw", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {8, 3}, -1.0, 1.0);
            auto w = fixed_weights(rng, {3, 2, 4});
            return fd_max_rel_err({x}, [&]() { return weighted(nc_to_chw(x, 2, 4), w); });
        });
        op("concat_channel", [](std::uint64_t seed) {
            Rng rng(seed);
            auto a = randt(rng, {2, 5}, -1.0, 1.0);
            auto b = randt(rng, {3, 5}, -1.0, 1.0);
            auto w = fixed_weights(rng, {5, 5});
            return fd_max_rel_err({a, b}, [&]() {
                return weighted(concat_channel<double>({a, b}), w);
            });
        });
        op("conv1d", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 8}, -1.0, 1.0);
            auto k = randt(rng, {2, 3, 3}, -1.0, 1.0);
            auto w = fixed_weights(rng, {2, 8});
            double e = fd_max_rel_err({x, k}, [&]() {
                return weighted(conv1d(x, k, 1, 1, 1), w);
            });
            auto wd = fixed_weights(rng, {2, 4});
            return std::max(e, fd_max_rel_err({x, k}, [&]() {
                                return weighted(conv1d(x, k, 1, 0, 2), wd);
                            }));
        });
        op("conv2d", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {1, 2, 5, 5}, -1.0, 1.0);
            auto k = randt(rng, {3, 2, 3, 3}, -1.0, 1.0);
            auto w1 = fixed_weights(rng, {1, 3, 5, 5});
            double e = fd_max_rel_err({x, k}, [&]() { return weighted(conv2d(x, k, 1, 1), w1); });
            auto xb = randt(rng, {2, 2, 5, 5}, -1.0, 1.0);
            auto w2 = fixed_weights(rng, {2, 3, 2, 2});
            return std::max(e, fd_max_rel_err({xb, k}, [&]() {
                                return weighted(conv2d(xb, k, 2, 0), w2);
                            }));
        });
        op("conv3d", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 4, 5}, -1.0, 1.0);
            auto k = randt(rng, {2, 2, 2, 3, 3}, -1.0, 1.0);
            auto w1 = fixed_weights(rng, {2, 2, 4, 5});
            double e = fd_max_rel_err({x, k}, [&]() {
                return weighted(conv3d(x, k, {1, 1, 1}, {0, 1, 1}), w1);
            });
            auto w2 = fixed_weights(rng, {2, 2, 2, 3});
            return std::max(e, fd_max_rel_err({x, k}, [&]() {
                                return weighted(conv3d(x, k, {1, 2, 2}, {0, 1, 1}), w2);
                            }));
        });
        op("maxpool_hw", [](std::uint64_t seed) {
            // redraw until every window has a clear argmax margin, so the
            // +-eps probes cannot flip the selected element
            for (std::uint64_t attempt = 0;; ++attempt) {
                Rng rng(Rng::mix(seed, attempt));
                auto x = randt(rng, {1, 2, 4, 4}, -1.0, 1.0);
                bool ok = true;
                for (int c = 0; c < 2 && ok; ++c)
                    for (int ho = 0; ho < 2 && ok; ++ho)
                        for (int wo = 0; wo < 2 && ok; ++wo) {
                            double best = -1e9, second = -1e9;
                            for (int i = 0; i < 2; ++i)
                                for (int j = 0; j < 2; ++j) {
                                    const double v =
                                        x.data()[((c * 4) + ho * 2 + i) * 4 + wo * 2 + j];
                                    if (v > best) {
                                        second = best;
                                        best = v;
                                    } else if (v > second) {
                                        second = v;
                                    }
                                }
                            ok = best - second > 1e-3;
                        }
                if (!ok) continue;
                auto w = fixed_weights(rng, {1, 2, 2, 2});
                return fd_max_rel_err({x}, [&]() { return weighted(maxpool_hw(x, 2, 2), w); });
            }
        });
        op("softmax_lastdim", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 5}, -2.0, 2.0);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x}, [&]() { return weighted(softmax_lastdim(x), w); });
        });
        op("layer_norm", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {4, 6}, -1.0, 1.0);
            auto gain = randt(rng, {6}, 0.5, 1.5);
            auto bias = randt(rng, {6}, -0.5, 0.5);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x, gain, bias}, [&]() {
                return weighted(layer_norm_lastdim(x, gain, bias), w);
            });
        });
        op("batch_norm", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 4, 4}, -1.0, 1.0);
            auto gain = randt(rng, {3}, 0.5, 1.5);
            auto bias = randt(rng, {3}, -0.5, 0.5);
            auto w = fixed_weights(rng, x.shape());
            std::vector<double> rm(3, 0.0), rv(3, 1.0);
            return fd_max_rel_err({x, gain, bias}, [&]() {
                return weighted(batch_norm(x, gain, bias, rm, rv, true), w);
            });
        });
        op("batch_norm_eval", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {2, 3, 4, 4}, -1.0, 1.0);
            auto gain = randt(rng, {3}, 0.5, 1.5);
            auto bias = randt(rng, {3}, -0.5, 0.5);
            auto w = fixed_weights(rng, x.shape());
            std::vector<double> rm{0.1, -0.2, 0.05}, rv{1.1, 0.9, 1.3};
            return fd_max_rel_err({x, gain, bias}, [&]() {
                return weighted(batch_norm(x, gain, bias, rm, rv, false), w);
            });
        });
        op("soft_threshold", [](std::uint64_t seed) {
            Rng rng(seed);
            auto tau = randt(rng, {2, 3}, 0.2, 0.8);
            auto x = TensorD::zeros({2, 3, 2, 2});
            // keep ||x|-tau| away from the shrinkage kink
            for (int t = 0; t < 2; ++t)
                for (int c = 0; c < 3; ++c) {
                    const double th = tau.data()[t * 3 + c];
                    for (int i = 0; i < 4; ++i) {
                        const bool outside = rng.uniform() < 0.6;
                        const double mag = outside ? th + rng.uniform(0.05, 1.0)
                                                   : th * rng.uniform(0.05, 0.9);
                        x.data()[(t * 3 + c) * 4 + i] = rng.uniform() < 0.5 ? -mag : mag;
                    }
                }
            x.set_requires_grad(true);
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x, tau}, [&]() { return weighted(soft_threshold(x, tau), w); });
        });
        op("cross_entropy", [](std::uint64_t seed) {
            Rng rng(seed);
            auto logits = randt(rng, {3, 4}, -2.0, 2.0);
            std::vector<int> labels{2, 0, 3};
            return fd_max_rel_err({logits}, [&]() {
                return cross_entropy_logits(logits, labels);
            });
        });
        op("dropout", [](std::uint64_t seed) {
            Rng rng(seed);
            auto x = randt(rng, {3, 4}, -1.0, 1.0);
            std::vector<double> mask(12);
            for (auto& m : mask) m = rng.uniform() < 0.75 ? 1.0 / 0.75 : 0.0;
            auto w = fixed_weights(rng, x.shape());
            return fd_max_rel_err({x}, [&]() { return weighted(dropout_mask(x, mask), w); });
        });

        // composite modules, checked through their public forward paths
        s.push_back({"estimate_threshold", CheckKind::Module, [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStoreT<double> ps;
                         auto subnet = nn::make_threshold_subnet(ps, rng, "subnet", 6, 4);
                         auto x = rand_signed(rng, {2, 6, 3, 3}, 0.05, 1.5);
                         auto w = fixed_weights(rng, {2, 6});
                         std::vector<TensorD> inputs{x};
                         for (auto& p : ps.items()) inputs.push_back(p.tensor);
                         return fd_max_rel_err(inputs, [&]() {
                             return weighted(subnet.estimate(x), w);
                         });
                     }});
        s.push_back({"drsblock", CheckKind::Module, [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStoreT<double> ps;
                         StateRegistryT<double> sr;
                         auto block = nn::make_drs_block(ps, sr, rng, "block", 4, 4, 1, true, 4);
                         auto x = randt(rng, {2, 4, 4, 4}, -1.0, 1.0);
                         auto w = fixed_weights(rng, x.shape());
                         std::vector<TensorD> inputs{x};
                         for (auto& p : ps.items()) inputs.push_back(p.tensor);
                         return fd_max_rel_err(inputs, [&]() {
                             return weighted(block.forward(x, true), w);
                         });
                     }});
        s.push_back({"acvi", CheckKind::Module, [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStoreT<double> ps;
                         auto acvi = nn::make_acvi(ps, rng, "acvi", 4, false);
                         // give the fusion scales a nonzero operating point
                         acvi.alpha_l.data()[0] = 0.7;
                         acvi.alpha_r.data()[0] = -0.4;
                         auto xl = randt(rng, {1, 4, 3, 3}, -1.0, 1.0);
                         auto xr = randt(rng, {1, 4, 3, 3}, -1.0, 1.0);
                         auto w = fixed_weights(rng, xl.shape());
                         std::vector<TensorD> inputs{xl, xr};
                         for (auto& p : ps.items()) inputs.push_back(p.tensor);
                         return fd_max_rel_err(inputs, [&]() {
                             auto [l, r] = acvi.forward(xl, xr);
                             return add(weighted(l, w), weighted(r, w));
                         });
                     }});
        s.push_back({"model-end-to-end", CheckKind::EndToEnd, [](std::uint64_t seed) {
                         Rng rng(Rng::mix(seed, 0xe2e));
                         RalConfig cfg;
                         cfg.num_classes = 2;
                         cfg.stage_channels = {4, 8};
                         cfg.blocks_per_stage = 1;
                         cfg.mstcn_kernels = {3};
                         cfg.dropout = 0.0;
                         nn::RalModelT<double> model(cfg, seed);
                         auto batch = TensorD::zeros({2, 1, 4, 16, 16});
                         for (auto& v : batch.vec()) v = rng.uniform();
                         std::vector<int> labels{0, 1};
                         std::vector<TensorD> inputs;
                         for (auto& p : model.params().items()) inputs.push_back(p.tensor);
                         Rng sampler(Rng::mix(seed, 0x5a5a));
                         return fd_sampled_rel_err(
                             inputs,
                             [&]() {
                                 return cross_entropy_logits(model.forward(batch, true, nullptr),
                                                             labels);
                             },
                             25, sampler);
                     }});
        return s;
    }();
    return suite;
}

GradcheckReport run_gradcheck_suite(double op_tol, double module_tol, double e2e_tol,
                                    std::uint64_t seed) {
    GradcheckReport report;
    for (const auto& entry : gradcheck_suite()) {
        const double tol = entry.kind == CheckKind::Op       ? op_tol
                           : entry.kind == CheckKind::Module ? module_tol
                                                             : e2e_tol;
        const double err = entry.run(Rng::mix(seed, fnv1a(entry.name)));
        const bool pass = err < tol;
        report.lines.push_back({entry.name, err, tol, pass});
        report.all_pass = report.all_pass && pass;
    }
    return report;
}

}  // namespace ral
