#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "cli.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"

namespace spectral::cli {

namespace {

bool compatible(const Json& def, const Json& v) {
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number()) return v.is_number();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); });
    return false;
}

void merge(Json& out, const Json& layer, const char* source) {
    if (layer.is_null()) return;
    if (!layer.is_object()) throw Error(ErrorKind::ConfigError, std::string(source) + " must be a JSON object");
    for (auto it = layer.begin(); it != layer.end(); ++it) {
        if (!out.contains(it.key())) {
            throw Error(ErrorKind::ConfigError, std::string("unknown key '") + it.key() + "' in " + source);
        }
        if (!compatible(out[it.key()], it.value())) {
            throw Error(ErrorKind::ConfigError, std::string("key '") + it.key() + "' in " + source + " has the wrong type");
        }
        out[it.key()] = it.value();
    }
}

}  // namespace

Json resolve_config(const Json& defaults, const Json& file, const Json& overrides) {
    Json out = defaults;
    merge(out, file, "config file");
    merge(out, overrides, "command line");
    if (out.contains("schema") && out["schema"] != defaults["schema"]) {
        throw Error(ErrorKind::ConfigError, "schema '" + out["schema"].get<std::string>() + "' does not match '" +
                                                defaults["schema"].get<std::string>() + "'");
    }
    return out;
}

std::string output_path(const std::string& value, const std::string& fallback_name) {
    if (!value.empty()) return value;
    const char* env = std::getenv("SPECTRAL_OUT_DIR");
    const std::filesystem::path dir = (env && *env) ? env : ".";
    return (dir / fallback_name).string();
}

std::string write_resolved_config(const std::string& primary_output, const Json& cfg) {
    std::filesystem::path p(primary_output);
    p.replace_extension(".config.json");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
    out << cfg.dump(2) << '\n';
    return p.string();
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error(ErrorKind::LengthMismatch, "CSV row width differs from header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string s;
    auto line = [&s](const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) s += ',';
            s += f[i];
        }
        s += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return s;
}

void CsvTable::write(const std::string& path) const {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << str();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

std::string fmt(double v) { return format_double(v); }

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace spectral::cli
