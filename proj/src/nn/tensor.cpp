#include "gdl/nn.hpp"

#include "gdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

namespace gdl::nn {

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
    if (find(name) != nullptr) {
        throw ContractError("duplicate tensor name " + name);
    }
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    tensors_.push_back({std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
    return tensors_.size() - 1;
}

const Tensor *ParamSet::find(std::string_view name) const {
    const auto it = std::find_if(tensors_.begin(), tensors_.end(), [&](const Tensor &t) { return t.name == name; });
    return it == tensors_.end() ? nullptr : &*it;
}

Tensor *ParamSet::find(std::string_view name) {
    return const_cast<Tensor *>(static_cast<const ParamSet *>(this)->find(name));
}

const Tensor &ParamSet::at(std::string_view name) const {
    const Tensor *t = find(name);
    if (t == nullptr) {
        throw ContractError("no tensor named " + std::string(name));
    }
    return *t;
}

Tensor &ParamSet::at(std::string_view name) { return const_cast<Tensor &>(static_cast<const ParamSet *>(this)->at(name)); }

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto &t : tensors_) {
        out.add(t.name, t.shape);
    }
    return out;
}

void ParamSet::zero() {
    for (auto &t : tensors_) {
        std::fill(t.data.begin(), t.data.end(), 0.0);
    }
}

std::size_t ParamSet::numel() const {
    std::size_t n = 0;
    for (const auto &t : tensors_) {
        n += t.numel();
    }
    return n;
}

bool ParamSet::all_finite() const {
    return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor &t) {
        return std::all_of(t.data.begin(), t.data.end(), [](double v) { return std::isfinite(v); });
    });
}

bool ParamSet::same_layout(const ParamSet &other) const {
    if (size() != other.size()) {
        return false;
    }
    for (std::size_t i = 0; i < size(); ++i) {
        if (tensors_[i].name != other[i].name || tensors_[i].shape != other[i].shape) {
            return false;
        }
    }
    return true;
}

bool operator==(const ParamSet &a, const ParamSet &b) {
    if (!a.same_layout(b)) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        // Bitwise: distinguishes -0.0 and compares NaN payloads.
        if (!std::equal(a[i].data.begin(), a[i].data.end(), b[i].data.begin(),
                        [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; })) {
            return false;
        }
    }
    return true;
}

void init_normal(ParamSet &params, std::uint64_t seed, double std, const std::vector<std::string> &skip) {
    for (auto &t : params) {
        if (std::find(skip.begin(), skip.end(), t.name) != skip.end()) {
            continue;
        }
        Rng rng = Rng::stream(seed, {name_key("init"), name_key(t.name)});
        for (auto &v : t.data) {
            v = std * rng.normal();
        }
    }
}

} // namespace gdl::nn
