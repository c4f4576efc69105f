#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "demonet/tensor.hpp"

namespace demonet {

/// Ordered collection of uniquely named tensors.
class WeightSet {
public:
    struct Entry {
        std::string name;
        ad::Tensor tensor;
    };

    /// Throws ConfigError on a duplicate name.
    void add(std::string name, ad::Tensor tensor);

    bool contains(std::string_view name) const;
    ad::Tensor& get(std::string_view name);
    const ad::Tensor& get(std::string_view name) const;

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Learnable tensors only (running statistics excluded), in insertion order.
    std::vector<ad::Tensor> trainable() const;
    std::vector<std::string> trainable_names() const;

    void set_trainable(bool requires_grad);
    void zero_grad();
    /// Releases every gradient buffer.
    void drop_grads();

    /// Deep copy; the result shares no storage with *this.
    WeightSet clone() const;

    /// Entries whose name starts with `prefix`, with the prefix stripped.
    WeightSet extract(std::string_view prefix) const;
    /// Adds every entry of `other` under `prefix`.
    void merge(std::string_view prefix, const WeightSet& other);

    /// Bitwise equality of names, shapes and values.
    bool identical(const WeightSet& other) const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Batch-norm running statistics are stored with the weights but not trained.
bool is_running_stat(std::string_view name);

}  // namespace demonet
