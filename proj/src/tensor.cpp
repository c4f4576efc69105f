#include "demonet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "demonet/error.hpp"

namespace demonet::ad {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
    if (dims.size() > kMaxRank) throw ShapeError("tensor rank above 4");
    std::copy(dims.begin(), dims.end(), dims_.begin());
    rank_ = dims.size();
}

std::size_t Shape::numel() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
    return n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < rank_; ++i) os << (i ? "x" : "") << dims_[i];
    os << ')';
    return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad) : s_(std::make_shared<Storage>()) {
    s_->data.assign(shape.numel(), 0.0);
    s_->shape = shape;
    s_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) : s_(std::make_shared<Storage>()) {
    if (values.size() != shape.numel())
        throw ShapeError("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                         shape.str());
    s_->shape = shape;
    s_->data = std::move(values);
    s_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(Shape{1}, {value}, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
    Tensor t(shape, requires_grad);
    std::fill(t.s_->data.begin(), t.s_->data.end(), value);
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
    return s_->data[0];
}

std::span<double> Tensor::grad() const {
    if (s_->grad.empty()) s_->grad.assign(s_->data.size(), 0.0);
    return s_->grad;
}

void Tensor::zero_grad() {
    if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    Tensor t(s_->shape, s_->data, false);
    t.s_->requires_grad = s_->requires_grad;
    return t;
}

double& Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    const Shape& sh = s_->shape;
    return s_->data[((n * sh[1] + c) * sh[2] + h) * sh[3] + w];
}

double Tensor::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    const Shape& sh = s_->shape;
    return s_->data[((n * sh[1] + c) * sh[2] + h) * sh[3] + w];
}

bool Graph::tracks(std::initializer_list<const Tensor*> inputs) const {
    if (!recording_) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t && t->requires_grad(); });
}

void Graph::record(std::string_view op, Tensor output, std::function<void()> backward_fn) {
    output.set_requires_grad(true);
    nodes_.push_back(Node{op, std::move(output), std::move(backward_fn)});
}

void Graph::verify(const Tensor& output, std::string_view op) const {
    if (!check_finite_) return;
    for (double v : output.data())
        if (!std::isfinite(v)) throw NumericError("non-finite value produced by " + std::string(op));
}

std::vector<std::string_view> Graph::op_names() const {
    std::vector<std::string_view> names;
    names.reserve(nodes_.size());
    for (const auto& n : nodes_) names.push_back(n.op);
    return names;
}

void backward(Graph& graph, Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) throw ShapeError("backward() needs a scalar loss");
    if (graph.nodes_.empty()) throw ShapeError("backward() on an empty graph");
    if (!loss.requires_grad()) throw ShapeError("loss does not depend on any tensor requiring grad");
    loss.grad()[0] += 1.0;
    for (auto it = graph.nodes_.rbegin(); it != graph.nodes_.rend(); ++it) {
        // Nodes that the loss does not depend on never received a gradient.
        if (!it->output.has_grad()) continue;
        it->backward_fn();
    }
    graph.nodes_.clear();
}

}  // namespace demonet::ad
