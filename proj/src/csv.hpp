#pragma once

#include "analysis.hpp"
#include "synthesis.hpp"
#include "trainer.hpp"

#include <string>

namespace lcov {

// Numbers are written in shortest round-trip form.
void write_train_log_csv(const std::string &path, const TrainLog &log);
void write_synth_trace_csv(const std::string &path, const std::vector<SynthTraceEntry> &trace);
void write_histogram_csv(const std::string &path, const Histogram &h);

} // namespace lcov
