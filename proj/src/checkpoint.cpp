#include "saint/checkpoint.hpp"

#include <bit>
#include <boost/crc.hpp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <vector>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace saint {

struct CheckpointAccess {
  static void write(const ReplayBuffer& b, class CheckpointWriter& w);
  static void read(ReplayBuffer& b, class CheckpointReader& r);
};

namespace {

constexpr char kMagic[8] = {'S', 'A', 'I', 'N', 'T', 'Q', 'N', '\0'};

std::uint32_t crc32(const char* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

}  // namespace

class CheckpointWriter {
 public:
  template <class T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    if (!v.empty()) out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_ += s;
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class CheckpointReader {
 public:
  CheckpointReader(const char* data, std::size_t n) : p_(data), end_(data + n) {}
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  template <class T>
  std::vector<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > static_cast<std::uint64_t>(end_ - p_) / sizeof(T)) fail();
    std::vector<T> v(n);
    if (n) std::memcpy(v.data(), p_, n * sizeof(T));
    p_ += n * sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(p_, n);
    p_ += n;
    return s;
  }
  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) fail();
  }
  [[noreturn]] static void fail() {
    throw CheckpointError(CheckpointError::Kind::kFormat, "checkpoint payload is malformed");
  }
  const char* p_;
  const char* end_;
};

void CheckpointAccess::write(const ReplayBuffer& b, CheckpointWriter& w) {
  w.pod<std::uint64_t>(b.capacity_);
  w.pod<std::uint64_t>(b.dim_);
  w.pod<std::uint64_t>(b.size_);
  w.pod<std::uint64_t>(b.head_);
  w.vec(b.states_);
  w.vec(b.next_);
  w.vec(b.rewards_);
  w.vec(b.actions_);
  w.vec(b.dones_);
}

void CheckpointAccess::read(ReplayBuffer& b, CheckpointReader& r) {
  b.capacity_ = r.pod<std::uint64_t>();
  b.dim_ = r.pod<std::uint64_t>();
  b.size_ = r.pod<std::uint64_t>();
  b.head_ = r.pod<std::uint64_t>();
  b.states_ = r.vec<double>();
  b.next_ = r.vec<double>();
  b.rewards_ = r.vec<double>();
  b.actions_ = r.vec<int>();
  b.dones_ = r.vec<std::uint8_t>();
  const std::size_t cells = b.capacity_ * b.dim_;
  if (b.states_.size() != cells || b.next_.size() != cells || b.rewards_.size() != b.capacity_ ||
      b.actions_.size() != b.capacity_ || b.dones_.size() != b.capacity_ ||
      b.size_ > b.capacity_ || (b.capacity_ && b.head_ >= b.capacity_))
    throw CheckpointError(CheckpointError::Kind::kFormat, "replay section has inconsistent sizes");
}

namespace {

void write_net(CheckpointWriter& w, const QNetwork& n) {
  std::vector<std::int32_t> dims(n.dims().begin(), n.dims().end());
  w.vec(dims);
  w.vec(n.params());
  w.vec(n.norm().mean);
  w.vec(n.norm().var);
  w.pod(n.norm().momentum);
  w.pod(n.norm().eps);
  w.pod<std::uint8_t>(n.norm().enabled);
}

QNetwork read_net(CheckpointReader& r) {
  const auto dims32 = r.vec<std::int32_t>();
  std::vector<int> dims(dims32.begin(), dims32.end());
  QNetwork n;
  try {
    n = QNetwork(dims);
  } catch (const DimensionError& e) {
    throw CheckpointError(CheckpointError::Kind::kFormat, e.what());
  }
  auto params = r.vec<double>();
  if (params.size() != n.param_count())
    throw CheckpointError(CheckpointError::Kind::kFormat, "parameter count does not match dims");
  n.params() = std::move(params);
  n.norm().mean = r.vec<double>();
  n.norm().var = r.vec<double>();
  n.norm().momentum = r.pod<double>();
  n.norm().eps = r.pod<double>();
  n.norm().enabled = r.pod<std::uint8_t>() != 0;
  if (n.norm().mean.size() != static_cast<std::size_t>(n.input_dim()) ||
      n.norm().var.size() != n.norm().mean.size())
    throw CheckpointError(CheckpointError::Kind::kFormat, "normalization size mismatch");
  return n;
}

void write_config(CheckpointWriter& w, const DqnConfig& c) {
  w.pod<std::int32_t>(c.state_dim);
  w.pod<std::int32_t>(c.action_count);
  w.pod<std::int32_t>(c.hidden_dim);
  w.pod<std::int32_t>(c.hidden_layers);
  w.pod(c.gamma);
  w.pod(c.learning_rate);
  w.pod<std::int32_t>(c.batch_size);
  w.pod<std::int32_t>(c.replay_capacity);
  w.pod<std::int32_t>(c.train_start);
  w.pod<std::int32_t>(c.target_sync_episodes);
  w.pod(c.epsilon_start);
  w.pod(c.epsilon_min);
  w.pod(c.epsilon_decay);
  w.pod(c.init_stddev);
}

DqnConfig read_config(CheckpointReader& r) {
  DqnConfig c;
  c.state_dim = r.pod<std::int32_t>();
  c.action_count = r.pod<std::int32_t>();
  c.hidden_dim = r.pod<std::int32_t>();
  c.hidden_layers = r.pod<std::int32_t>();
  c.gamma = r.pod<double>();
  c.learning_rate = r.pod<double>();
  c.batch_size = r.pod<std::int32_t>();
  c.replay_capacity = r.pod<std::int32_t>();
  c.train_start = r.pod<std::int32_t>();
  c.target_sync_episodes = r.pod<std::int32_t>();
  c.epsilon_start = r.pod<double>();
  c.epsilon_min = r.pod<double>();
  c.epsilon_decay = r.pod<double>();
  c.init_stddev = r.pod<double>();
  return c;
}

}  // namespace

std::string encode_checkpoint(const DqnAgent& agent, const std::string& meta) {
  CheckpointWriter p;
  write_config(p, agent.config());
  write_net(p, agent.online());
  write_net(p, agent.target());
  const AdamState& a = agent.adam();
  p.pod(a.learning_rate);
  p.pod(a.beta1);
  p.pod(a.beta2);
  p.pod(a.epsilon);
  p.pod<std::int64_t>(a.t);
  p.vec(a.m);
  p.vec(a.v);
  const EpsilonSchedule& s = agent.schedule();
  p.pod(s.start);
  p.pod(s.minimum);
  p.pod(s.decay);
  p.pod<std::int64_t>(s.steps);
  p.pod<std::int64_t>(agent.episodes());
  p.pod<std::int64_t>(agent.updates());
  p.str(agent.explore_rng().save_state());
  p.str(agent.replay_rng().save_state());
  CheckpointAccess::write(agent.replay(), p);
  p.str(meta);

  CheckpointWriter out;
  out.bytes().append(kMagic, sizeof kMagic);
  out.pod<std::uint32_t>(kCheckpointVersion);
  out.pod<std::uint64_t>(p.bytes().size());
  out.bytes() += p.bytes();
  out.pod<std::uint32_t>(crc32(out.bytes().data(), out.bytes().size()));
  return std::move(out.bytes());
}

DqnAgent decode_checkpoint(const std::string& bytes, std::string* meta) {
  constexpr std::size_t header = sizeof kMagic + 4 + 8;
  if (bytes.size() < header + 4)
    throw CheckpointError(CheckpointError::Kind::kChecksum, "checkpoint checksum mismatch (file too short)");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError(CheckpointError::Kind::kFormat, "not a checkpoint file (bad magic)");
  CheckpointReader head(bytes.data() + sizeof kMagic, 12);
  const auto version = head.pod<std::uint32_t>();
  const auto payload = head.pod<std::uint64_t>();
  if (bytes.size() != header + payload + 4) {
    throw CheckpointError(CheckpointError::Kind::kChecksum,
                          "checkpoint checksum mismatch (size " + std::to_string(bytes.size()) +
                              ", expected " + std::to_string(header + payload + 4) + ")");
  }
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + header + payload, 4);
  if (stored != crc32(bytes.data(), header + payload))
    throw CheckpointError(CheckpointError::Kind::kChecksum, "checkpoint checksum mismatch");
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::kVersion,
                          "unsupported checkpoint version " + std::to_string(version));

  CheckpointReader r(bytes.data() + header, payload);
  const DqnConfig config = read_config(r);
  DqnAgent out;
  out.online() = read_net(r);
  out.target() = read_net(r);
  AdamState& a = out.adam();
  a.learning_rate = r.pod<double>();
  a.beta1 = r.pod<double>();
  a.beta2 = r.pod<double>();
  a.epsilon = r.pod<double>();
  a.t = r.pod<std::int64_t>();
  a.m = r.vec<double>();
  a.v = r.vec<double>();
  EpsilonSchedule& s = out.schedule();
  s.start = r.pod<double>();
  s.minimum = r.pod<double>();
  s.decay = r.pod<double>();
  s.steps = r.pod<std::int64_t>();
  const auto episodes = r.pod<std::int64_t>();
  const auto updates = r.pod<std::int64_t>();
  out.set_counters(episodes, updates);
  try {
    out.explore_rng().load_state(r.str());
    out.replay_rng().load_state(r.str());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointError::Kind::kFormat, e.what());
  }
  CheckpointAccess::read(out.replay(), r);
  const std::string m = r.str();
  if (!r.done()) throw CheckpointError(CheckpointError::Kind::kFormat, "trailing bytes in payload");
  if (meta) *meta = m;
  out.restore_config(config);
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const DqnAgent& agent,
                     const std::string& meta) {
  const std::string bytes = encode_checkpoint(agent, meta);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(CheckpointError::Kind::kIo, "cannot rename " + tmp + ": " + ec.message());
}

DqnAgent load_checkpoint(const std::filesystem::path& path, std::string* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str(), meta);
}

}  // namespace saint
