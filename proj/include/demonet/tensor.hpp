#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace demonet::ad {

enum class Mode { train, eval };

/// Dimensions of a tensor, rank 0..4. Feature maps are N x C x H x W.
class Shape {
public:
    static constexpr std::size_t kMaxRank = 4;

    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims);
    explicit Shape(std::span<const std::size_t> dims);

    std::size_t rank() const { return rank_; }
    std::size_t operator[](std::size_t i) const { return dims_[i]; }
    std::size_t numel() const;
    std::span<const std::size_t> dims() const { return {dims_.data(), rank_}; }
    std::string str() const;

    friend bool operator==(const Shape& a, const Shape& b) {
        return a.rank_ == b.rank_ && a.dims_ == b.dims_;
    }

private:
    std::array<std::size_t, kMaxRank> dims_{};
    std::size_t rank_ = 0;
};

/// Dense real tensor with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage, which is how parameters held in a
/// weight set and the graph nodes that read them stay connected. Use clone()
/// for an independent copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor filled(Shape shape, double value, bool requires_grad = false);

    bool defined() const { return s_ != nullptr; }
    const Shape& shape() const { return s_->shape; }
    std::size_t numel() const { return s_->data.size(); }
    std::size_t dim(std::size_t i) const { return s_->shape[i]; }

    std::span<double> data() { return s_->data; }
    std::span<const double> data() const { return s_->data; }
    double item() const;

    bool requires_grad() const { return s_ && s_->requires_grad; }
    void set_requires_grad(bool on) { s_->requires_grad = on; }

    bool has_grad() const { return s_ && !s_->grad.empty(); }
    /// Gradient buffer, allocated as zeros on first access. The buffer belongs
    /// to the shared storage, so const handles can accumulate into it.
    std::span<double> grad() const;
    void zero_grad();
    void drop_grad() { s_->grad.clear(); }

    Tensor clone() const;
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
    double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

private:
    struct Storage {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

/// Define-by-run tape. Operations append a node whenever their output needs a
/// gradient; backward() replays the tape in reverse exactly once.
class Graph {
public:
    Graph() = default;
    explicit Graph(bool check_finite) : check_finite_(check_finite) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// When off, operations neither record nodes nor mark outputs as needing grad.
    void set_recording(bool on) { recording_ = on; }
    bool recording() const { return recording_; }

    /// Throw NumericError from any op producing NaN/Inf.
    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

    /// True if an op over these inputs should track gradients.
    bool tracks(std::initializer_list<const Tensor*> inputs) const;

    void record(std::string_view op, Tensor output, std::function<void()> backward_fn);
    void verify(const Tensor& output, std::string_view op) const;

    std::size_t size() const { return nodes_.size(); }
    std::vector<std::string_view> op_names() const;
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::string_view op;
        Tensor output;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;
    bool check_finite_ = false;

    friend void backward(Graph& graph, Tensor& loss);
};

/// Populates grad() of every tensor reachable from `loss`, which must be a
/// single-element tensor. Consumes the graph.
void backward(Graph& graph, Tensor& loss);

}  // namespace demonet::ad
