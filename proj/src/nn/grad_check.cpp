#include "gdl/nn.hpp"

#include "gdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdl::nn {

bool GradCheckReport::passed() const {
    return std::all_of(tensors.begin(), tensors.end(), [](const TensorCheck &t) { return t.passed; });
}

const TensorCheck *GradCheckReport::find(std::string_view name) const {
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const TensorCheck &t) { return t.name == name; });
    return it == tensors.end() ? nullptr : &*it;
}

GradCheckReport grad_check(ParamSet &params, const ParamSet &analytic, const std::function<double()> &loss_fn,
                           const GradCheckOptions &options) {
    if (!params.same_layout(analytic)) {
        throw ContractError("grad_check: gradient layout does not match parameters");
    }
    GradCheckReport report;
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        Tensor &p = params[ti];
        const auto &g = analytic[ti].data;
        TensorCheck check;
        check.name = p.name;
        for (const double v : g) {
            check.max_abs_grad = std::max(check.max_abs_grad, std::abs(v));
        }

        std::vector<std::size_t> order(p.numel());
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (options.max_entries > 0 && order.size() > options.max_entries) {
            // Half the budget on the largest analytic entries, the rest random.
            const std::size_t top = options.max_entries / 2;
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                              [&](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });
            Rng rng = Rng::stream(options.seed, {name_key("grad-check"), name_key(p.name)});
            for (std::size_t i = top; i < options.max_entries; ++i) {
                std::swap(order[i], order[i + rng.below(order.size() - i)]);
            }
            order.resize(options.max_entries);
        }

        for (const std::size_t j : order) {
            const double saved = p.data[j];
            p.data[j] = saved + options.epsilon;
            const double up = loss_fn();
            p.data[j] = saved - options.epsilon;
            const double down = loss_fn();
            p.data[j] = saved;
            const double numeric = (up - down) / (2.0 * options.epsilon);
            const double denom = std::max({std::abs(numeric), std::abs(g[j]), options.floor});
            check.max_rel_error = std::max(check.max_rel_error, std::abs(numeric - g[j]) / denom);
            ++check.entries_checked;
        }
        check.passed = check.max_rel_error < options.tolerance;
        report.tensors.push_back(std::move(check));
    }
    return report;
}

} // namespace gdl::nn
