#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace ral {

// Architecture description plus the three ablation switches.
struct RalConfig {
    int num_classes = 10;
    std::vector<int> stage_channels = {16, 32, 64};
    int blocks_per_stage = 1;
    std::vector<int> acvi_after_stage;  // 0/1 per stage; empty means all stages
    std::vector<int> mstcn_kernels = {3, 5, 7};
    double dropout = 0.2;
    bool enable_dlsv = true;
    bool enable_rao = true;
    bool enable_acvi = true;
    int reduction_ratio = 4;
    bool share_view_layernorm = false;

    std::vector<int> acvi_flags() const {
        if (acvi_after_stage.empty()) return std::vector<int>(stage_channels.size(), 1);
        return acvi_after_stage;
    }

    void validate() const {
        if (num_classes < 2) throw ContractError("config: num_classes must be >= 2");
        if (stage_channels.empty()) throw ContractError("config: need at least one stage");
        for (int c : stage_channels)
            if (c < 1) throw ContractError("config: stage channels must be positive");
        if (!acvi_after_stage.empty() && acvi_after_stage.size() != stage_channels.size())
            throw ContractError("config: acvi_after_stage length " +
                                std::to_string(acvi_after_stage.size()) + " != stages " +
                                std::to_string(stage_channels.size()));
        if (blocks_per_stage < 1) throw ContractError("config: blocks_per_stage must be >= 1");
        if (mstcn_kernels.empty()) throw ContractError("config: mstcn_kernels must be non-empty");
        for (int k : mstcn_kernels)
            if (k < 1 || k % 2 == 0)
                throw ContractError("config: temporal kernels must be odd and positive");
        if (dropout < 0.0 || dropout >= 1.0) throw ContractError("config: dropout outside [0,1)");
        if (reduction_ratio < 1) throw ContractError("config: reduction_ratio must be >= 1");
    }
};

}  // namespace ral
