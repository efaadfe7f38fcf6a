#include "xtangle/common.hpp"

#include <algorithm>
#include <limits>

namespace xtangle {

WideCount checked_mul(WideCount a, WideCount b) {
  if (a != 0 && b > std::numeric_limits<WideCount>::max() / a) {
    throw OverflowError("exact integer exceeds 128-bit width");
  }
  return a * b;
}

WideCount checked_add(WideCount a, WideCount b) {
  if (b > std::numeric_limits<WideCount>::max() - a) {
    throw OverflowError("exact integer exceeds 128-bit width");
  }
  return a + b;
}

std::string to_string(WideCount value) {
  if (value == 0) return "0";
  std::string out;
  while (value > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t checked_pow(std::size_t base, int exponent) {
  std::size_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && result > std::numeric_limits<std::size_t>::max() / base) {
      throw OverflowError("dimension " + std::to_string(base) + "^" + std::to_string(exponent) +
                          " overflows size_t");
    }
    result *= base;
  }
  return result;
}

namespace {
thread_local CapProbe* active_probe = nullptr;
}

CapProbe::CapProbe() : outer_(active_probe) { active_probe = this; }

CapProbe::~CapProbe() {
  active_probe = outer_;
  if (outer_) outer_->record(what_, peak_);
}

void CapProbe::record(const std::string& what, std::size_t requested) {
  if (requested > peak_) {
    peak_ = requested;
    what_ = what;
  }
}

void check_cap(const std::string& what, std::size_t rows, std::size_t cols, const Limits& limits) {
  const std::size_t c = std::max<std::size_t>(cols, 1);
  const std::size_t requested =
      rows > std::numeric_limits<std::size_t>::max() / c ? std::numeric_limits<std::size_t>::max() : rows * c;
  if (active_probe) active_probe->record(what, requested);
  if (requested > limits.max_entries) throw CapExceeded(what, requested, limits.max_entries);
}

}  // namespace xtangle
