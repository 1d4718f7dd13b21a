#include "perch/mlp.hpp"

#include <cmath>
#include <string>

#include "perch/errors.hpp"

namespace perch::rl {

std::vector<int> MlpSpec::dims() const {
    std::vector<int> d;
    d.reserve(hidden.size() + 2);
    d.push_back(n_in);
    d.insert(d.end(), hidden.begin(), hidden.end());
    d.push_back(n_out);
    return d;
}

long MlpSpec::param_count() const {
    const auto d = dims();
    long n = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l)
        n += static_cast<long>(d[l + 1]) * d[l] + d[l + 1];
    return n;
}

MlpNet::MlpNet(MlpSpec spec) : spec_(std::move(spec)), dims_(spec_.dims()) {
    if (spec_.n_in <= 0 || spec_.n_out <= 0)
        throw ValidationError("mlp: n_in and n_out must be positive");
    for (int h : spec_.hidden)
        if (h <= 0) throw ValidationError("mlp: hidden widths must be positive");

    long offset = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        w_offset_.push_back(offset);
        offset += static_cast<long>(dims_[l + 1]) * dims_[l];
        b_offset_.push_back(offset);
        offset += dims_[l + 1];
    }
    params_.assign(offset, 0.0);
}

MlpNet MlpNet::glorot(MlpSpec spec, RngStream& rng) {
    MlpNet net(std::move(spec));
    const int last = net.spec_.layer_count() - 1;
    for (int l = 0; l < last; ++l) {
        auto w = net.weight(l);
        const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
        for (long j = 0; j < w.cols(); ++j)
            for (long i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
    return net;
}

Eigen::Map<const Eigen::MatrixXd> MlpNet::weight(int layer) const {
    return {params_.data() + w_offset_.at(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<Eigen::MatrixXd> MlpNet::weight(int layer) {
    return {params_.data() + w_offset_.at(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Eigen::VectorXd> MlpNet::bias(int layer) const {
    return {params_.data() + b_offset_.at(layer), dims_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> MlpNet::bias(int layer) {
    return {params_.data() + b_offset_.at(layer), dims_[layer + 1]};
}

Eigen::VectorXd MlpNet::forward(const Eigen::VectorXd& input) const {
    if (input.size() != spec_.n_in)
        throw ShapeMismatch("mlp forward: input size " + std::to_string(input.size()) +
                            ", expected " + std::to_string(spec_.n_in));
    const int last = spec_.layer_count() - 1;
    Eigen::VectorXd h = input;
    for (int l = 0; l < last; ++l)
        h = (weight(l) * h + bias(l)).array().tanh().matrix();
    return spec_.output_scale * (weight(last) * h + bias(last));
}

Eigen::MatrixXd MlpNet::forward_batch(const Eigen::MatrixXd& input, Tape* tape) const {
    if (input.rows() != spec_.n_in)
        throw ShapeMismatch("mlp forward_batch: input rows " + std::to_string(input.rows()) +
                            ", expected " + std::to_string(spec_.n_in));
    const int last = spec_.layer_count() - 1;
    if (tape) {
        tape->layer_input.clear();
        tape->layer_input.reserve(last + 1);
    }
    Eigen::MatrixXd h = input;
    for (int l = 0; l < last; ++l) {
        if (tape) tape->layer_input.push_back(h);
        h = (((weight(l) * h).colwise() + bias(l)).array().tanh()).matrix();
    }
    if (tape) tape->layer_input.push_back(h);
    return spec_.output_scale * ((weight(last) * h).colwise() + bias(last));
}

void MlpNet::backward_batch(const Tape& tape, const Eigen::MatrixXd& dloss_dout,
                            std::vector<double>& grad) const {
    const int last = spec_.layer_count() - 1;
    if (static_cast<int>(tape.layer_input.size()) != last + 1)
        throw ShapeMismatch("mlp backward_batch: tape does not match architecture");
    if (dloss_dout.rows() != spec_.n_out ||
        dloss_dout.cols() != tape.layer_input.front().cols())
        throw ShapeMismatch("mlp backward_batch: gradient shape does not match batch");
    if (static_cast<long>(grad.size()) != spec_.param_count())
        throw ShapeMismatch("mlp backward_batch: grad buffer size mismatch");

    Eigen::MatrixXd delta = spec_.output_scale * dloss_dout;
    for (int l = last; l >= 0; --l) {
        const Eigen::MatrixXd& h = tape.layer_input[l];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_offset_[l], dims_[l + 1], dims_[l]);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_offset_[l], dims_[l + 1]);
        gw.noalias() += delta * h.transpose();
        gb += delta.rowwise().sum();
        if (l > 0) {
            // h is tanh of the previous layer's pre-activation, so the
            // local derivative is 1 - h^2.
            delta = ((weight(l).transpose() * delta).array() * (1.0 - h.array().square()))
                        .matrix();
        }
    }
}

void SgdMomentum::step(MlpNet& net, const std::vector<double>& grad) {
    auto& p = net.params();
    if (grad.size() != p.size() || velocity_.size() != p.size())
        throw ShapeMismatch("sgd step: parameter/gradient size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
        velocity_[i] = momentum_ * velocity_[i] + grad[i];
        p[i] -= lr_ * velocity_[i];
    }
}

}  // namespace perch::rl
