#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace castkit {

struct FaceId {
  std::uint64_t value = 0;
  friend auto operator<=>(const FaceId&, const FaceId&) = default;
};

struct IdentityId {
  std::uint64_t value = 0;
  friend auto operator<=>(const IdentityId&, const IdentityId&) = default;
};

}  // namespace castkit

template <>
struct std::hash<castkit::FaceId> {
  std::size_t operator()(const castkit::FaceId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};

template <>
struct std::hash<castkit::IdentityId> {
  std::size_t operator()(const castkit::IdentityId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
