#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cli_config.hpp"

namespace ddspin::cli {

struct CommandContext {
    std::string out_dir = "out";
    int threads = 2;
    std::uint64_t seed = 0;
    std::string config_path;
    std::string command;
};

int cmd_mf_scan(const RunConfig& cfg, const CommandContext& ctx);
int cmd_mfqf_run(const RunConfig& cfg, const CommandContext& ctx);
int cmd_mfqf_sweep(const RunConfig& cfg, const CommandContext& ctx);
int cmd_exact_scan(const RunConfig& cfg, const CommandContext& ctx);
int cmd_emit_plotdata(const std::string& figure, const std::vector<std::string>& inputs,
                      const std::string& out_dir);

} // namespace ddspin::cli
