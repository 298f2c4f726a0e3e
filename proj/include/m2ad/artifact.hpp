#pragma once

#include <string>

#include "m2ad/pipeline.hpp"

namespace m2ad {

// Canonical JSON (sorted keys, shortest round-trip floats); the same model
// always serializes to the same bytes, and save(load(f)) == f byte for byte.
std::string artifact_to_json(const TrainedModel& model);
TrainedModel artifact_from_json(const std::string& text);

void save_artifact(const TrainedModel& model, const std::string& path);
TrainedModel load_artifact(const std::string& path);

// Temp-file-and-rename write used for every output the CLI produces.
void write_file_atomic(const std::string& path, const std::string& contents);

} // namespace m2ad
