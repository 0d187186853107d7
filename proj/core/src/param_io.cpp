#include "spectral/param_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spectral/error.hpp"

namespace spectral {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'T', 'F', 'P', 'A', 'R', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

void put_mat(std::string& out, const Mat& m) {
    for (double x : m.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

nlohmann::json shape(const Mat& m) { return nlohmann::json::array({m.rows(), m.cols()}); }

class Reader {
public:
    Reader(const std::string& b, std::size_t pos) : bytes_(b), pos_(pos) {}

    Mat mat(const nlohmann::json& s) {
        if (!s.is_array() || s.size() != 2) throw Error(ErrorKind::ParseError, "bad shape entry in header");
        const auto r = s[0].get<std::size_t>();
        const auto c = s[1].get<std::size_t>();
        Mat m(r, c);
        if (pos_ + 8 * m.size() > bytes_.size()) throw Error(ErrorKind::ParseError, "parameter payload truncated");
        for (double& x : m.data()) {
            x = std::bit_cast<double>(get_u64(bytes_, pos_));
            pos_ += 8;
        }
        return m;
    }
    std::size_t pos() const { return pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_;
};

}  // namespace

std::string serialize_params(const TransformerParams& params, const std::string& extra_json) {
    nlohmann::json extra;
    try {
        extra = nlohmann::json::parse(extra_json);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("extra header is not JSON: ") + e.what());
    }
    if (!extra.is_object()) throw Error(ErrorKind::ParseError, "extra header must be a JSON object");
    nlohmann::json h;
    h["format"] = "spectral-transformer-params";
    h["version"] = 1;
    h["dtype"] = "float64-le";
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& b : params.layers) {
        nlohmann::json l;
        l["activation"] = b.attn.activation == Activation::ReLU ? "relu" : "softmax";
        nlohmann::json heads = nlohmann::json::array();
        for (const auto& hd : b.attn.heads) heads.push_back({{"v", shape(hd.v)}, {"q", shape(hd.q)}, {"k", shape(hd.k)}});
        l["heads"] = heads;
        l["w1"] = shape(b.fc.w1);
        l["w2"] = shape(b.fc.w2);
        layers.push_back(l);
    }
    h["layers"] = layers;
    h["w0_out"] = shape(params.w0_out);
    h["w1_out"] = shape(params.w1_out);
    h["extra"] = extra;
    const std::string header = h.dump();

    std::string out(kMagic, 8);
    put_u64(out, header.size());
    out += header;
    for (const auto& b : params.layers) {
        for (const auto& hd : b.attn.heads) {
            put_mat(out, hd.v);
            put_mat(out, hd.q);
            put_mat(out, hd.k);
        }
        put_mat(out, b.fc.w1);
        put_mat(out, b.fc.w2);
    }
    put_mat(out, params.w0_out);
    put_mat(out, params.w1_out);
    return out;
}

TransformerParams deserialize_params(const std::string& bytes, std::string* extra_json) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw Error(ErrorKind::ParseError, "not a parameter container (bad magic)");
    }
    const std::uint64_t hlen = get_u64(bytes, 8);
    if (hlen > bytes.size() - 16) throw Error(ErrorKind::ParseError, "header length exceeds file size");
    TransformerParams p;
    try {
        const auto h = nlohmann::json::parse(bytes.substr(16, hlen));
        if (h.at("version").get<int>() != 1) throw Error(ErrorKind::ParseError, "unsupported container version");
        Reader rd(bytes, 16 + hlen);
        for (const auto& l : h.at("layers")) {
            Block b;
            const auto act = l.at("activation").get<std::string>();
            if (act != "relu" && act != "softmax") throw Error(ErrorKind::ParseError, "unknown activation " + act);
            b.attn.activation = act == "relu" ? Activation::ReLU : Activation::Softmax;
            for (const auto& hd : l.at("heads")) {
                AttnHead head;
                head.v = rd.mat(hd.at("v"));
                head.q = rd.mat(hd.at("q"));
                head.k = rd.mat(hd.at("k"));
                b.attn.heads.push_back(std::move(head));
            }
            b.fc.w1 = rd.mat(l.at("w1"));
            b.fc.w2 = rd.mat(l.at("w2"));
            p.layers.push_back(std::move(b));
        }
        p.w0_out = rd.mat(h.at("w0_out"));
        p.w1_out = rd.mat(h.at("w1_out"));
        if (rd.pos() != bytes.size()) throw Error(ErrorKind::ParseError, "trailing bytes after payload");
        if (extra_json) *extra_json = h.contains("extra") ? h["extra"].dump() : "{}";
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("bad container header: ") + e.what());
    }
    return p;
}

void save_params(const std::string& path, const TransformerParams& params, const std::string& extra_json) {
    const std::string bytes = serialize_params(params, extra_json);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

TransformerParams load_params(const std::string& path, std::string* extra_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_params(ss.str(), extra_json);
}

}  // namespace spectral
