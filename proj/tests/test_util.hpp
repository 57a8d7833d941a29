#pragma once

// Shared test scaffolding: deterministic random tensors, a scratch directory
// that cleans itself up, file slurping, and a tiny process runner for the CLI
// integration tests.

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dialrank/tensor.hpp"

namespace testutil {

inline dialrank::Tensor rnd_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape,
                                   double lo, double hi, bool requires_grad = false) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(n);
  for (auto& v : data) v = dist(rng);
  return dialrank::Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

// Entries with |x| in [lo, hi]: keeps power_norm and friends away from their
// non-smooth point at zero.
inline dialrank::Tensor rnd_tensor_away_from_zero(std::mt19937_64& rng,
                                                  std::vector<std::size_t> shape, double lo,
                                                  double hi, bool requires_grad = false) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution neg(0.5);
  std::vector<double> data(n);
  for (auto& v : data) v = neg(rng) ? -mag(rng) : mag(rng);
  return dialrank::Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

struct RunResult {
  int exit_code = -1;
  std::string out;  // stdout only; stderr goes to its own file
  std::string err;
};

// Runs a shell command with stdout/stderr captured through temp files.
inline RunResult run_command(const std::string& cmd, const TempDir& dir) {
  static std::atomic<unsigned> counter{0};
  const unsigned id = counter++;
  const std::string out_path = dir.file("cmd-out-" + std::to_string(id));
  const std::string err_path = dir.file("cmd-err-" + std::to_string(id));
  const std::string full = cmd + " > " + out_path + " 2> " + err_path;
  const int raw = std::system(full.c_str());
  RunResult r;
  r.exit_code = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

inline std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
  const auto pos = t.find_last_of('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

}  // namespace testutil
