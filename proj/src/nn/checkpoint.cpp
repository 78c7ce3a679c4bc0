#include "gdl/nn.hpp"

#include "gdl/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace gdl::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::string &out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_string(std::string &out, const std::string &s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    Reader(std::string_view bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    void get_doubles(std::vector<double> &out) {
        need(out.size() * sizeof(double));
        std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
        pos_ += out.size() * sizeof(double);
    }

    bool done() const { return pos_ == bytes_.size(); }
    std::size_t left() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw ConfigError("checkpoint truncated at byte " + std::to_string(pos_));
        }
    }

    std::string_view bytes_;
    std::size_t pos_;
};

} // namespace

std::string encode_checkpoint(const Checkpoint &ckpt) {
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, ckpt.meta.dump());
    for (const auto &t : ckpt.params) {
        put_string(out, t.name);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (const auto dim : t.shape) {
            put<std::uint64_t>(out, dim);
        }
        out.append(reinterpret_cast<const char *>(t.data.data()), t.data.size() * sizeof(double));
    }
    return out;
}

Checkpoint decode_checkpoint(const std::string &bytes) {
    if (bytes.size() < sizeof kCheckpointMagic ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw ConfigError("not a checkpoint (bad magic)");
    }
    Reader r(bytes, sizeof kCheckpointMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    try {
        ckpt.meta = nlohmann::json::parse(r.get_string());
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("checkpoint metadata: ") + e.what());
    }
    while (!r.done()) {
        std::string name = r.get_string();
        const auto rank = r.get<std::uint32_t>();
        std::vector<std::size_t> shape;
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
            // Reject shapes larger than the bytes that remain before allocating.
            if (shape.back() != 0 && count > r.left() / sizeof(double) / shape.back()) {
                throw ConfigError("checkpoint tensor " + name + " is larger than the file");
            }
            count *= shape.back();
        }
        const std::size_t idx = ckpt.params.add(std::move(name), std::move(shape));
        r.get_doubles(ckpt.params[idx].data);
    }
    return ckpt;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write checkpoint " + path);
    }
    const std::string bytes = encode_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open checkpoint " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

} // namespace gdl::nn
