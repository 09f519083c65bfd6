#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ddsra {

enum class LayerKind { Convolution, Pooling, FullyConnected };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// Architecture hyper-parameters for one layer. Fields that do not apply to
// the layer kind must stay zero; validate() enforces this.
struct LayerSpec {
    LayerKind kind = LayerKind::Convolution;
    std::uint64_t batch_size = 1;       // B_s
    std::uint64_t precision_bytes = 4;  // S_f

    // convolution / pooling
    std::uint64_t in_height = 0;      // H_i
    std::uint64_t in_width = 0;       // W_i
    std::uint64_t in_channels = 0;    // C_i
    std::uint64_t out_height = 0;     // H_o
    std::uint64_t out_width = 0;      // W_o
    std::uint64_t out_channels = 0;   // C_o
    std::uint64_t filter_height = 0;  // H_f (convolution only)
    std::uint64_t filter_width = 0;   // W_f (convolution only)

    // fully connected
    std::uint64_t input_size = 0;   // S_i
    std::uint64_t output_size = 0;  // S_o

    // throws std::invalid_argument naming the offending field
    void validate() const;

    // weight-tensor element count (zero for pooling)
    std::uint64_t weight_elements() const;
};

struct LayerCost {
    std::uint64_t forward_flops = 0;   // o_l
    std::uint64_t backward_flops = 0;  // o'_l: error term, plus gradient term
                                       // for convolution / fully connected
    std::uint64_t memory_bytes = 0;    // g_l
};

// Evaluates the per-layer cost rows. The published fully-connected memory
// rows carry no precision factor; `uniform_precision_scaling` multiplies
// those rows by S_f so every kind accounts for precision the same way.
LayerCost layer_cost(const LayerSpec& layer, bool uniform_precision_scaling = false);

struct NetworkSpec {
    std::vector<LayerSpec> layers;  // index 1..L maps to layers[0..L-1]
    double model_size_bytes = 0;    // transfer size used by the comm model
    bool uniform_precision_scaling = false;

    void validate() const;
    std::size_t layer_count() const { return layers.size(); }
    double model_size_bits() const { return 8.0 * model_size_bytes; }

    // optional helper: S_f-weighted count of weight-tensor elements
    std::uint64_t derived_model_size_bytes() const;
};

struct PartitionCost {
    std::uint64_t bottom_flops = 0;  // sum of o_l + o'_l over layers 1..split
    std::uint64_t top_flops = 0;     // remainder
    std::uint64_t bottom_memory = 0;
    std::uint64_t top_memory = 0;
};

// Prefix sums over per-layer costs so any split point is an O(1) query.
// `batch_override` replaces every layer's B_s (0 keeps the given values);
// flops tables are built with batch 1 to get per-sample counts while memory
// tables use the training batch size.
class CostTable {
public:
    CostTable() = default;
    explicit CostTable(const NetworkSpec& net, std::uint64_t batch_override = 0);

    std::size_t layer_count() const { return flops_prefix_.empty() ? 0 : flops_prefix_.size() - 1; }

    std::uint64_t bottom_flops(std::size_t split) const { return flops_prefix_.at(split); }
    std::uint64_t top_flops(std::size_t split) const { return flops_prefix_.back() - flops_prefix_.at(split); }
    std::uint64_t bottom_memory(std::size_t split) const { return mem_prefix_.at(split); }
    std::uint64_t top_memory(std::size_t split) const { return mem_prefix_.back() - mem_prefix_.at(split); }

    std::uint64_t total_flops() const { return flops_prefix_.back(); }
    std::uint64_t total_memory() const { return mem_prefix_.back(); }

private:
    std::vector<std::uint64_t> flops_prefix_;  // flops_prefix_[l] = sum_{1..l} (o + o')
    std::vector<std::uint64_t> mem_prefix_;
};

// One-shot split query; throws std::out_of_range for split > L.
PartitionCost partition_costs(const NetworkSpec& net, std::size_t split);

}  // namespace ddsra
