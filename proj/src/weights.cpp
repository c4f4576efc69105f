#include "demonet/weights.hpp"

#include <cstring>

#include "demonet/error.hpp"

namespace demonet {

bool is_running_stat(std::string_view name) {
    return name.ends_with(".running_mean") || name.ends_with(".running_var");
}

void WeightSet::add(std::string name, ad::Tensor tensor) {
    if (index_.contains(name)) throw ConfigError("duplicate weight name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

bool WeightSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

ad::Tensor& WeightSet::get(std::string_view name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing weight '" + std::string(name) + "'");
    return entries_[it->second].tensor;
}

const ad::Tensor& WeightSet::get(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing weight '" + std::string(name) + "'");
    return entries_[it->second].tensor;
}

std::vector<ad::Tensor> WeightSet::trainable() const {
    std::vector<ad::Tensor> out;
    for (const auto& e : entries_)
        if (!is_running_stat(e.name)) out.push_back(e.tensor);
    return out;
}

std::vector<std::string> WeightSet::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
        if (!is_running_stat(e.name)) out.push_back(e.name);
    return out;
}

void WeightSet::set_trainable(bool requires_grad) {
    for (auto& e : entries_)
        if (!is_running_stat(e.name)) e.tensor.set_requires_grad(requires_grad);
}

void WeightSet::zero_grad() {
    for (auto& e : entries_)
        if (e.tensor.has_grad()) e.tensor.zero_grad();
}

void WeightSet::drop_grads() {
    for (auto& e : entries_)
        if (e.tensor.has_grad()) e.tensor.drop_grad();
}

WeightSet WeightSet::clone() const {
    WeightSet out;
    for (const auto& e : entries_) out.add(e.name, e.tensor.clone());
    return out;
}

WeightSet WeightSet::extract(std::string_view prefix) const {
    WeightSet out;
    for (const auto& e : entries_)
        if (std::string_view(e.name).starts_with(prefix)) out.add(e.name.substr(prefix.size()), e.tensor);
    return out;
}

void WeightSet::merge(std::string_view prefix, const WeightSet& other) {
    for (const auto& e : other.entries_) add(std::string(prefix) + e.name, e.tensor);
}

bool WeightSet::identical(const WeightSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || !(a.tensor.shape() == b.tensor.shape())) return false;
        if (std::memcmp(a.tensor.data().data(), b.tensor.data().data(), a.tensor.numel() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

}  // namespace demonet
