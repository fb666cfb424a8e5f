#include <fstream>
#include <iterator>

#include "arwlab/arw.hpp"

namespace arwlab::arw {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'R', 'W', 'T'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t le(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            need(1);
            const std::uint8_t b = bytes_[pos_++];
            v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
            if (!(b & 0x80)) return v;
        }
        throw TapeFormatError("varint longer than 64 bits");
    }

    [[nodiscard]] bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t k) const {
        if (bytes_.size() - pos_ < k) throw TapeFormatError("truncated tape");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tape(const InstructionTape& tape) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_le(out, kTapeVersion, 4);
    put_le(out, tape.seed(), 8);
    put_le(out, static_cast<std::uint64_t>(tape.n()), 4);
    for (std::int64_t site = 0; site < tape.n(); ++site) {
        const auto& run = tape.run(static_cast<std::uint32_t>(site));
        put_varint(out, run.size());
        for (const Instruction ins : run) put_varint(out, ins.code);
    }
    return out;
}

InstructionTape decode_tape(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    for (std::uint8_t m : kMagic) {
        if (in.le(1) != m) throw TapeFormatError("bad magic; not an ARWT tape");
    }
    const std::uint64_t version = in.le(4);
    if (version != kTapeVersion) {
        throw TapeFormatError("unsupported tape version " + std::to_string(version));
    }
    const std::uint64_t seed = in.le(8);
    const std::uint64_t n = in.le(4);
    if (n == 0) throw TapeFormatError("tape declares n = 0");
    InstructionTape tape(static_cast<std::int64_t>(n), seed);
    for (std::uint64_t site = 0; site < n; ++site) {
        const std::uint64_t len = in.varint();
        std::vector<Instruction> run;
        for (std::uint64_t k = 0; k < len; ++k) {
            const std::uint64_t code = in.varint();
            if (code >= n + 2) throw TapeFormatError("instruction targets a site outside [n]");
            run.push_back(Instruction{static_cast<std::uint32_t>(code)});
        }
        tape.set_run(static_cast<std::uint32_t>(site), std::move(run));
    }
    if (!in.done()) throw TapeFormatError("trailing bytes after tape");
    return tape;
}

void save_tape(const std::string& path, const InstructionTape& tape) {
    const auto bytes = encode_tape(tape);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

InstructionTape load_tape(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tape(bytes);
}

}  // namespace arwlab::arw
