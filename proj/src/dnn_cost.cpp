#include "ddsra/dnn_cost.hpp"

#include <algorithm>
#include <stdexcept>

namespace ddsra {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Convolution: return "convolution";
        case LayerKind::Pooling: return "pooling";
        case LayerKind::FullyConnected: return "fully_connected";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "convolution") return LayerKind::Convolution;
    if (name == "pooling") return LayerKind::Pooling;
    if (name == "fully_connected") return LayerKind::FullyConnected;
    throw std::invalid_argument("unknown layer kind: " + name);
}

namespace {

void require_positive(std::uint64_t v, const char* field) {
    if (v == 0) {
        throw std::invalid_argument(std::string("layer field must be >= 1: ") + field);
    }
}

void require_zero(std::uint64_t v, const char* field) {
    if (v != 0) {
        throw std::invalid_argument(std::string("layer field not applicable to this kind: ") + field);
    }
}

}  // namespace

void LayerSpec::validate() const {
    require_positive(batch_size, "batch_size");
    require_positive(precision_bytes, "precision_bytes");
    switch (kind) {
        case LayerKind::Convolution:
            require_positive(in_height, "in_height");
            require_positive(in_width, "in_width");
            require_positive(in_channels, "in_channels");
            require_positive(out_height, "out_height");
            require_positive(out_width, "out_width");
            require_positive(out_channels, "out_channels");
            require_positive(filter_height, "filter_height");
            require_positive(filter_width, "filter_width");
            require_zero(input_size, "input_size");
            require_zero(output_size, "output_size");
            break;
        case LayerKind::Pooling:
            require_positive(in_height, "in_height");
            require_positive(in_width, "in_width");
            require_positive(in_channels, "in_channels");
            require_positive(out_height, "out_height");
            require_positive(out_width, "out_width");
            require_positive(out_channels, "out_channels");
            require_zero(filter_height, "filter_height");
            require_zero(filter_width, "filter_width");
            require_zero(input_size, "input_size");
            require_zero(output_size, "output_size");
            break;
        case LayerKind::FullyConnected:
            require_positive(input_size, "input_size");
            require_positive(output_size, "output_size");
            require_zero(in_height, "in_height");
            require_zero(in_width, "in_width");
            require_zero(in_channels, "in_channels");
            require_zero(out_height, "out_height");
            require_zero(out_width, "out_width");
            require_zero(out_channels, "out_channels");
            require_zero(filter_height, "filter_height");
            require_zero(filter_width, "filter_width");
            break;
    }
}

std::uint64_t LayerSpec::weight_elements() const {
    switch (kind) {
        case LayerKind::Convolution:
            return in_channels * filter_height * filter_width * out_channels;
        case LayerKind::Pooling:
            return 0;
        case LayerKind::FullyConnected:
            return input_size * output_size;
    }
    return 0;
}

LayerCost layer_cost(const LayerSpec& layer, bool uniform_precision_scaling) {
    layer.validate();
    LayerCost cost;
    const std::uint64_t bs = layer.batch_size;
    const std::uint64_t sf = layer.precision_bytes;

    switch (layer.kind) {
        case LayerKind::Convolution: {
            const std::uint64_t weight = sf * layer.in_channels * layer.filter_height *
                                         layer.filter_width * layer.out_channels;
            const std::uint64_t fwd_out = sf * bs * layer.out_channels * layer.out_height * layer.out_width;
            const std::uint64_t bwd_err = sf * bs * layer.in_channels * layer.in_height * layer.in_width;
            const std::uint64_t gradient = weight;
            cost.memory_bytes = weight + fwd_out + bwd_err + gradient;

            cost.forward_flops = 2 * bs * layer.in_channels * layer.filter_height * layer.filter_width *
                                 layer.out_channels * layer.out_height * layer.out_width;
            const std::uint64_t err_flops =
                2 * bs * (2 * layer.filter_width + layer.filter_width * layer.out_width - 2) *
                (2 * layer.filter_height + layer.filter_height * layer.out_height - 2);
            const std::uint64_t grad_flops = cost.forward_flops;  // same product as the forward row
            cost.backward_flops = err_flops + grad_flops;
            break;
        }
        case LayerKind::Pooling: {
            const std::uint64_t fwd_out = sf * bs * layer.out_channels * layer.out_height * layer.out_width;
            const std::uint64_t bwd_err = sf * bs * layer.in_channels * layer.in_height * layer.in_width;
            cost.memory_bytes = fwd_out + bwd_err;

            cost.forward_flops = bs * layer.in_channels * layer.in_height * layer.in_width;
            cost.backward_flops = cost.forward_flops;  // error term only, no weights
            break;
        }
        case LayerKind::FullyConnected: {
            // published rows omit S_f here; the switch restores it
            const std::uint64_t scale = uniform_precision_scaling ? sf : 1;
            const std::uint64_t weight = scale * layer.input_size * layer.output_size;
            const std::uint64_t fwd_out = scale * bs * layer.output_size;
            const std::uint64_t bwd_err = scale * bs * layer.input_size;
            const std::uint64_t gradient = weight;
            cost.memory_bytes = weight + fwd_out + bwd_err + gradient;

            cost.forward_flops = 2 * bs * layer.input_size * layer.output_size;
            const std::uint64_t err_flops = 2 * bs * layer.input_size * layer.output_size;
            const std::uint64_t grad_flops = bs * layer.input_size * layer.output_size;
            cost.backward_flops = err_flops + grad_flops;
            break;
        }
    }
    return cost;
}

void NetworkSpec::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("network must have at least one layer");
    }
    if (!(model_size_bytes > 0)) {
        throw std::invalid_argument("model_size_bytes must be > 0");
    }
    for (const LayerSpec& layer : layers) {
        layer.validate();
    }
}

std::uint64_t NetworkSpec::derived_model_size_bytes() const {
    std::uint64_t bytes = 0;
    for (const LayerSpec& layer : layers) {
        bytes += layer.precision_bytes * layer.weight_elements();
    }
    return bytes;
}

CostTable::CostTable(const NetworkSpec& net, std::uint64_t batch_override) {
    flops_prefix_.assign(net.layers.size() + 1, 0);
    mem_prefix_.assign(net.layers.size() + 1, 0);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        LayerSpec layer = net.layers[i];
        if (batch_override != 0) {
            layer.batch_size = batch_override;
        }
        const LayerCost cost = layer_cost(layer, net.uniform_precision_scaling);
        flops_prefix_[i + 1] = flops_prefix_[i] + cost.forward_flops + cost.backward_flops;
        mem_prefix_[i + 1] = mem_prefix_[i] + cost.memory_bytes;
    }
}

PartitionCost partition_costs(const NetworkSpec& net, std::size_t split) {
    net.validate();
    if (split > net.layers.size()) {
        throw std::out_of_range("partition split out of range");
    }
    const CostTable table(net);
    PartitionCost pc;
    pc.bottom_flops = table.bottom_flops(split);
    pc.top_flops = table.top_flops(split);
    pc.bottom_memory = table.bottom_memory(split);
    pc.top_memory = table.top_memory(split);
    return pc;
}

}  // namespace ddsra
