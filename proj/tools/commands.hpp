#pragma once

#include <stdexcept>
#include <string>

#include "surgkin/config.hpp"

namespace surgkin::cli {

// Missing upstream artifact; the message names the command to run first.
struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    RunConfig cfg;
    std::size_t jobs = 1;
};

void cmd_gen(const Context& ctx);
void cmd_encode(const Context& ctx);
void cmd_train(const Context& ctx);
void cmd_convert(const Context& ctx);
// `use_snn` evaluates the converted network instead of the base model.
void cmd_eval(const Context& ctx, bool use_snn);
void cmd_ablate(const Context& ctx);
void cmd_embed(const Context& ctx);
// Full pipeline plus a pass/fail table; throws TrainingError when a row fails.
void cmd_repro(const Context& ctx);

}  // namespace surgkin::cli
