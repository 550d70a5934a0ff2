#pragma once

#include <cstdint>

namespace taburpl {

// Link-estimator constants.
inline constexpr double kLsPacketSmoothing = 0.75;  // per-packet EWMA weight on history
inline constexpr double kLsWindowSmoothing = 0.75;  // windowed EWMA weight on history
inline constexpr double kEtxSmoothing = 0.75;
inline constexpr double kLsInitial = 0.5;
inline constexpr double kEtxInitial = 1.0;
inline constexpr double kLsFloor = 0.05;
inline constexpr double kResidualFloor = 0.05;  // joules
inline constexpr unsigned kLsWindow = 32;        // frames

/// ls = 0.75 * ls_prev + 0.25 * [acked]
double update_ls_packet(double ls_prev, bool acked) noexcept;

/// ls = 0.75 * ls_prev + 0.25 * acks / txs; returns ls_prev unchanged when
/// the window is empty.
double update_ls_windowed(double ls_prev, unsigned acks_in_window, unsigned txs_in_window);

/// floor(256 * ls) clamped into a byte. ls = 1.0 maps to 255, losing one LSB.
std::uint8_t quantize_ls(double ls) noexcept;

constexpr double dequantize_ls(std::uint8_t byte) noexcept { return byte / 256.0; }

double update_etx(double etx_prev, unsigned attempts_for_success);

/// max(e_r, 0.05 J), keeping 1/E_r bounded by 20 J^-1.
double safe_residual(double residual_joules) noexcept;

/// Running statistics of one directed link.
class LinkStats {
 public:
  /// Records one MAC attempt outcome (per-packet EWMA plus the frame window).
  void record_attempt(bool acked);

  /// Records the attempts spent on one frame, whether or not it got through.
  void record_frame(unsigned attempts);

  /// Applies the windowed EWMA over the last kLsWindow frame outcomes.
  void apply_window();

  double ls() const noexcept { return ls_; }
  std::uint8_t ls_byte() const noexcept { return quantize_ls(ls_); }
  double etx() const noexcept { return etx_; }
  std::uint64_t tx_count() const noexcept { return tx_count_; }
  std::uint64_t ack_count() const noexcept { return ack_count_; }

  unsigned window_length() const noexcept { return window_len_; }
  unsigned window_acks() const noexcept;

  /// False for neighbours that do not piggyback the one-byte stability field.
  bool ls_reported() const noexcept { return ls_reported_; }
  void set_ls_reported(bool reported) noexcept { ls_reported_ = reported; }

 private:
  double ls_ = kLsInitial;
  double etx_ = kEtxInitial;
  std::uint64_t tx_count_ = 0;
  std::uint64_t ack_count_ = 0;
  std::uint32_t window_bits_ = 0;  // bit i set: i-th most recent attempt was acked
  unsigned window_len_ = 0;
  bool ls_reported_ = true;
};

/// Link stability as the cost function sees it: the dequantized byte when the
/// neighbour reports it, otherwise 1/ETX; never below 0.05.
double ls_for_cost(const LinkStats& stats) noexcept;

/// Battery of one node. Residual only ever decreases and stays >= 0.
class EnergyState {
 public:
  explicit EnergyState(double initial_joules = 1000.0);

  /// Removes up to `joules` and returns the amount actually removed.
  double debit(double joules);

  double initial() const noexcept { return initial_; }
  double residual() const noexcept { return residual_; }
  double consumed() const noexcept { return initial_ - residual_; }

 private:
  double initial_;
  double residual_;
};

}  // namespace taburpl
