#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "spectral/error.hpp"

namespace spectral::cli {

namespace {

struct Command {
    const char* name;
    const char* help;
    Json (*defaults)();
    int (*run)(const Json&);
};

const Command kCommands[] = {
    {"pca", "power method with deflation vs the Jacobi oracle", pca_defaults, cmd_pca},
    {"gmm", "two-class spectral clustering vs the Bayes classifier", gmm_defaults, cmd_gmm},
    {"construct", "build and verify the hand-constructed transformer", construct_defaults, cmd_construct},
    {"train", "SGD pre-training on synthetic instances", train_defaults, cmd_train},
    {"gradcheck", "backward pass vs central finite differences", gradcheck_defaults, cmd_gradcheck},
};

std::string flag_name(const std::string& key) {
    std::string f = "--" + key;
    for (char& c : f) {
        if (c == '_') c = '-';
    }
    return f;
}

double to_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw Error(ErrorKind::ConfigError, "--" + key + " expects a number, got '" + s + "'");
    return v;
}

Json coerce(const std::string& key, const Json& def, const std::string& s) {
    if (def.is_number_unsigned()) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw Error(ErrorKind::ConfigError, "--" + key + " expects a non-negative integer, got '" + s + "'");
        }
        return std::stoull(s);
    }
    if (def.is_number_integer()) return std::stoll(s);
    if (def.is_number()) return to_double(key, s);
    if (def.is_array()) {
        if (!s.empty() && s.front() == '[') return Json::parse(s);
        Json arr = Json::array();
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) arr.push_back(to_double(key, item));
        return arr;
    }
    return s;
}

Json read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ConfigError, "config file " + path + ": " + e.what());
    }
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::ConfigError:
        case ErrorKind::KTooLarge:
        case ErrorKind::NTooSmall:
        case ErrorKind::BadSplit:
        case ErrorKind::BadInterval:
        case ErrorKind::DimMismatch:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::LengthMismatch:
            return kConfigError;
        case ErrorKind::DivergenceDetected:
            return kDiverged;
        default:
            return kDataError;
    }
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Spectral algorithms, ReLU-attention transformers and their constructions"};
    app.require_subcommand(1);

    struct Bound {
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
        std::map<std::string, CLI::Option*> opts;
        std::string config;
    };
    std::map<std::string, Bound> bound;
    std::map<std::string, CLI::App*> subs;

    for (const Command& c : kCommands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->set_help_flag("--help", "Print this help message and exit");
        Bound& b = bound[c.name];
        sub->add_option("--config", b.config, "JSON file with parameter values");
        const Json def = c.defaults();
        for (auto it = def.begin(); it != def.end(); ++it) {
            if (it.key() == "schema") continue;
            const std::string flag = flag_name(it.key());
            const std::string shown = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
            if (it.value().is_boolean()) {
                b.flags[it.key()] = it.value().get<bool>();
                b.opts[it.key()] = sub->add_flag(flag, b.flags[it.key()], "default " + shown);
            } else {
                b.opts[it.key()] = sub->add_option(flag, b.values[it.key()], "default " + shown);
            }
        }
        subs[c.name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    for (const Command& c : kCommands) {
        if (!subs[c.name]->parsed()) continue;
        Bound& b = bound[c.name];
        try {
            const Json def = c.defaults();
            Json overrides = Json::object();
            for (const auto& [key, opt] : b.opts) {
                if (opt->count() == 0) continue;
                overrides[key] = def[key].is_boolean() ? Json(b.flags[key]) : coerce(key, def[key], b.values[key]);
            }
            const Json file = b.config.empty() ? Json() : read_config_file(b.config);
            return c.run(resolve_config(def, file, overrides));
        } catch (const Error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return exit_code(e.kind());
        } catch (const Json::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kConfigError;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kDataError;
        }
    }
    return kConfigError;
}

}  // namespace spectral::cli
