#include "csv.hpp"

#include "error.hpp"

#include <fmt/format.h>

#include <cstdio>

namespace lcov {

namespace {

template <typename F> void write_file(const std::string &path, F &&body) {
  std::string text;
  body(text);
  std::FILE *f = std::fopen(path.c_str(), "wb");
  if (!f)
    fail(ErrorCode::Io, "cannot write '" + path + "'");
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok)
    fail(ErrorCode::Io, "write failed for '" + path + "'");
}

} // namespace

void write_train_log_csv(const std::string &path, const TrainLog &log) {
  write_file(path, [&](std::string &out) {
    out += "step,local_dim,recons,global_dim,total,elapsed_seconds\n";
    for (const auto &e : log.entries)
      out += fmt::format("{},{},{},{},{},{}\n", e.step, e.energy.local_dim, e.energy.recons, e.energy.global_dim,
                         e.energy.total, e.elapsed_seconds);
  });
}

void write_synth_trace_csv(const std::string &path, const std::vector<SynthTraceEntry> &trace) {
  write_file(path, [&](std::string &out) {
    out += "step,objective,step_size\n";
    for (const auto &e : trace)
      out += fmt::format("{},{},{}\n", e.step, e.objective, e.step_size);
  });
}

void write_histogram_csv(const std::string &path, const Histogram &h) {
  write_file(path, [&](std::string &out) {
    out += "bin_left,bin_right,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      out += fmt::format("{},{},{}\n", h.edges[i], h.edges[i + 1], h.counts[i]);
  });
}

} // namespace lcov
