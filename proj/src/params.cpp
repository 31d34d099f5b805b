#include "vsa/params.hpp"

#include <cstring>

namespace vsa {

int ParamStore::add(const std::string& name, Tensor value) {
    require(index_.find(name) == index_.end(), ErrorKind::contract,
            "duplicate parameter name: " + name);
    value.requires_grad = true;
    value.ensure_finite(name.c_str());
    const int idx = static_cast<int>(params_.size());
    params_.push_back({name, std::move(value)});
    index_[name] = idx;
    return idx;
}

int ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

Tensor& ParamStore::value(const std::string& name) {
    const int idx = index_of(name);
    require(idx >= 0, ErrorKind::contract, "unknown parameter: " + name);
    return params_[static_cast<std::size_t>(idx)].value;
}

namespace {
std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace

std::uint64_t ParamStore::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : params_)
        h = fnv1a(h, e.value.data.data(), e.value.data.size() * sizeof(double));
    return h;
}

std::uint64_t ParamStore::content_hash(const std::vector<int>& indices) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i : indices) {
        const auto& v = value(i);
        h = fnv1a(h, v.data.data(), v.data.size() * sizeof(double));
    }
    return h;
}

std::vector<Tensor> ParamStore::snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& e : params_) out.push_back(e.value);
    return out;
}

void ParamStore::restore_values(const std::vector<Tensor>& values) {
    require(values.size() == params_.size(), ErrorKind::contract,
            "snapshot size does not match parameter store");
    for (std::size_t i = 0; i < values.size(); ++i) {
        require(values[i].shape == params_[i].value.shape, ErrorKind::contract,
                "snapshot shape mismatch for " + params_[i].name);
        params_[i].value.data = values[i].data;
    }
}

GradBuffer::GradBuffer(const ParamStore& store) {
    grads_.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
        grads_.emplace_back(store.value(static_cast<int>(i)).shape);
    touched_.assign(store.size(), 0);
}

void GradBuffer::clear() {
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        if (!touched_[i]) continue;
        std::memset(grads_[i].data.data(), 0, grads_[i].data.size() * sizeof(double));
        touched_[i] = 0;
    }
    pending_.clear();
}

void GradBuffer::accumulate(int param_index, const Tensor& grad) {
    auto& dst = grads_.at(static_cast<std::size_t>(param_index));
    require(dst.shape == grad.shape, ErrorKind::dimension, "gradient shape mismatch");
    touched_[static_cast<std::size_t>(param_index)] = 1;
    const std::size_t n = dst.data.size();
    const double* g = grad.data.data();
    double* d = dst.data.data();
    for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
}

void GradBuffer::accumulate(const Tape::LeafGrad& grad) {
    if (!grad.factored()) {
        accumulate(grad.param_id, grad.grad);
        return;
    }
    touched_[static_cast<std::size_t>(grad.param_id)] = 1;
    pending_.push_back({grad.param_id, grad.factor_g, grad.factor_x});
}

void GradBuffer::finalize() {
    if (pending_.empty()) return;
    // One blocked pass per parameter: the dense gradient row stays hot while
    // every factor streams through it.
    std::vector<int> params;
    for (const auto& p : pending_)
        if (std::find(params.begin(), params.end(), p.param) == params.end())
            params.push_back(p.param);
    for (int param : params) {
        Tensor& dst = grads_.at(static_cast<std::size_t>(param));
        const std::size_t rows = dst.shape.dims[0];
        const std::size_t cols = dst.shape.dims[1];
        for (std::size_t r = 0; r < rows; ++r) {
            double* __restrict__ grow = dst.data.data() + r * cols;
            for (const auto& p : pending_) {
                if (p.param != param) continue;
                const std::size_t n = p.g.shape.dims[0];
                const std::size_t m = p.g.shape.dims[1];
                for (std::size_t o = 0; o < n; ++o) {
                    const double go = p.g.data[o * m + r];
                    if (go == 0.0) continue;
                    const double* __restrict__ xrow = p.x->data.data() + o * cols;
                    for (std::size_t cc = 0; cc < cols; ++cc) grow[cc] += go * xrow[cc];
                }
            }
        }
    }
    pending_.clear();
}

void GradBuffer::scale_all(double s) {
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        if (!touched_[i]) continue;
        for (auto& v : grads_[i].data) v *= s;
    }
}

}  // namespace vsa
