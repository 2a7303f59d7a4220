#pragma once

#include <iosfwd>

#include "json.hpp"

namespace dimafx::pipeline {

// Each command reads a resolved configuration, writes under its output
// directory and prints a short summary. Errors surface as ConfigError,
// DataError or NumericalError.

void cmd_simulate(const nlohmann::json& config, std::ostream& log);
void cmd_prototype(const nlohmann::json& config, std::ostream& log);
void cmd_train(const nlohmann::json& config, std::ostream& log);
void cmd_stratify(const nlohmann::json& config, std::ostream& log);
void cmd_explain(const nlohmann::json& config, std::ostream& log);

} // namespace dimafx::pipeline
