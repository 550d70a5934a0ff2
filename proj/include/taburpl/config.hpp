#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "taburpl/engine.hpp"

namespace taburpl {

struct MatrixSpec {
  std::vector<std::size_t> sizes{50, 100, 200};
  std::vector<double> rates{2.0, 5.0, 10.0};
  std::vector<Protocol> protocols{Protocol::OF0, Protocol::EtxOf, Protocol::TabuUnnorm, Protocol::Taburpl};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  std::size_t cell_count() const noexcept { return sizes.size() * rates.size() * protocols.size(); }
  /// Throws InvalidArgument on an empty axis or a repeated seed.
  void validate() const;
};

struct ExperimentConfig {
  SimConfig scenario;
  MatrixSpec matrix;
};

/// INI text with [scenario], [radio], [weights], [tabu], [snapshot] and
/// [matrix] sections. Missing keys keep their defaults; unknown keys throw
/// UsageError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes every setting, so parse_config(write_config(c)) reproduces c.
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace taburpl
