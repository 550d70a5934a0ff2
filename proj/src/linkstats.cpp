#include "taburpl/linkstats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "taburpl/error.hpp"

namespace taburpl {

double update_ls_packet(double ls_prev, bool acked) noexcept {
  const double next = kLsPacketSmoothing * ls_prev + (1.0 - kLsPacketSmoothing) * (acked ? 1.0 : 0.0);
  return std::clamp(next, 0.0, 1.0);
}

double update_ls_windowed(double ls_prev, unsigned acks_in_window, unsigned txs_in_window) {
  if (txs_in_window == 0) return ls_prev;
  if (acks_in_window > txs_in_window)
    throw InvalidArgument("update_ls_windowed: more ACKs than transmissions");
  const double ratio = static_cast<double>(acks_in_window) / txs_in_window;
  return std::clamp(kLsWindowSmoothing * ls_prev + (1.0 - kLsWindowSmoothing) * ratio, 0.0, 1.0);
}

std::uint8_t quantize_ls(double ls) noexcept {
  const double scaled = std::floor(256.0 * std::clamp(ls, 0.0, 1.0));
  return static_cast<std::uint8_t>(std::min(scaled, 255.0));
}

double update_etx(double etx_prev, unsigned attempts_for_success) {
  if (attempts_for_success == 0) throw InvalidArgument("update_etx: attempts must be >= 1");
  const double next = kEtxSmoothing * etx_prev + (1.0 - kEtxSmoothing) * attempts_for_success;
  return std::max(next, 1.0);
}

double safe_residual(double residual_joules) noexcept {
  return std::max(residual_joules, kResidualFloor);
}

void LinkStats::record_attempt(bool acked) {
  ls_ = update_ls_packet(ls_, acked);
  ++tx_count_;
  if (acked) ++ack_count_;
  window_bits_ = (window_bits_ << 1) | (acked ? 1u : 0u);
  window_len_ = std::min(window_len_ + 1, kLsWindow);
}

void LinkStats::record_frame(unsigned attempts) { etx_ = update_etx(etx_, attempts); }

unsigned LinkStats::window_acks() const noexcept {
  const std::uint32_t mask = window_len_ >= 32 ? 0xffffffffu : ((1u << window_len_) - 1u);
  return static_cast<unsigned>(std::popcount(window_bits_ & mask));
}

void LinkStats::apply_window() { ls_ = update_ls_windowed(ls_, window_acks(), window_len_); }

double ls_for_cost(const LinkStats& stats) noexcept {
  const double raw = stats.ls_reported() ? dequantize_ls(stats.ls_byte()) : 1.0 / stats.etx();
  return std::clamp(raw, kLsFloor, 1.0);
}

EnergyState::EnergyState(double initial_joules) : initial_(initial_joules), residual_(initial_joules) {
  if (!(initial_joules >= 0.0)) throw InvalidArgument("initial energy must be non-negative");
}

double EnergyState::debit(double joules) {
  if (joules < 0.0) throw InvalidArgument("energy debit must be non-negative");
  const double taken = std::min(joules, residual_);
  residual_ -= taken;
  return taken;
}

}  // namespace taburpl
