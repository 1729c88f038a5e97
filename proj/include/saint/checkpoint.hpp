#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "saint/dqn.hpp"

namespace saint {

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kFormat, kVersion, kChecksum };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: 8 magic bytes "SAINTQN\0", u32 version, u64 payload size, payload,
// u32 CRC-32 of everything before it. All numbers little-endian; tensors are
// row-major float64. `meta` is a free-form string stored alongside (the
// harness records the episode count and config hash there).
std::string encode_checkpoint(const DqnAgent& agent, const std::string& meta = {});
DqnAgent decode_checkpoint(const std::string& bytes, std::string* meta = nullptr);

void save_checkpoint(const std::filesystem::path& path, const DqnAgent& agent,
                     const std::string& meta = {});
DqnAgent load_checkpoint(const std::filesystem::path& path, std::string* meta = nullptr);

}  // namespace saint
