#include "cbs/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "cbs/errors.hpp"

namespace cbs {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view value, std::size_t line_no) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ValidationError("config line " + std::to_string(line_no) + ": bad number '" +
                              std::string(value) + "'");
    return out;
}

template <typename T>
std::string format_number(T value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

using Setter = std::function<void(RunConfig&, std::string_view, std::size_t)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"warmup_epochs",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.warmup_epochs = parse_number<std::uint32_t>(v, n);
         }},
        {"total_epochs",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.total_epochs = parse_number<std::uint32_t>(v, n);
         }},
        {"batch_size",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.batch_size = parse_number<std::uint32_t>(v, n);
         }},
        {"initial_lr",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.initial_lr = parse_number<double>(v, n);
         }},
        {"momentum",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.momentum = parse_number<double>(v, n);
         }},
        {"weight_decay",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.weight_decay = parse_number<double>(v, n);
         }},
        {"selection_ratio",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.selection_ratio = parse_number<double>(v, n);
         }},
        {"noise_rate",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.noise_rate = parse_number<double>(v, n);
         }},
        {"mix_phi",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.mix_phi = parse_number<double>(v, n);
         }},
        {"mask_tau",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.mask_tau = parse_number<double>(v, n);
         }},
        {"ema_coefficient",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.ema_coefficient = parse_number<double>(v, n);
         }},
        {"loss_weight",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.loss_weight = parse_number<double>(v, n);
         }},
        {"hidden_dim",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.hidden_dim = parse_number<std::uint32_t>(v, n);
         }},
        {"weak_sigma",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.augment.weak_sigma = parse_number<double>(v, n);
         }},
        {"strong_sigma",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.augment.strong_sigma = parse_number<double>(v, n);
         }},
        {"strong_mask_prob",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.augment.strong_mask_prob = parse_number<double>(v, n);
         }},
        {"seed",
         [](RunConfig& c, std::string_view v, std::size_t n) {
             c.seed = parse_number<std::uint64_t>(v, n);
         }},
    };
    return table;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    RunConfig config;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text(line);
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
        const std::string key(trim(text.substr(0, eq)));
        const std::string_view value = trim(text.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        if (!seen.insert(key).second)
            throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" +
                                  key + "'");
        it->second(config, value, line_no);
    }
    validate_run_config(config);
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_run_config(in);
}

std::vector<std::pair<std::string, std::string>> config_key_values(const RunConfig& c) {
    validate_run_config(c);
    return {
        {"warmup_epochs", format_number(c.warmup_epochs)},
        {"total_epochs", format_number(c.total_epochs)},
        {"batch_size", format_number(c.batch_size)},
        {"initial_lr", format_number(c.initial_lr)},
        {"momentum", format_number(c.momentum)},
        {"weight_decay", format_number(c.weight_decay)},
        {"selection_ratio", format_number(resolved_selection_ratio(c))},
        {"noise_rate", format_number(c.noise_rate)},
        {"mix_phi", format_number(c.mix_phi)},
        {"mask_tau", format_number(c.mask_tau)},
        {"ema_coefficient", format_number(c.ema_coefficient)},
        {"loss_weight", format_number(c.loss_weight)},
        {"hidden_dim", format_number(c.hidden_dim)},
        {"weak_sigma", format_number(c.augment.weak_sigma)},
        {"strong_sigma", format_number(c.augment.strong_sigma)},
        {"strong_mask_prob", format_number(c.augment.strong_mask_prob)},
        {"seed", format_number(c.seed)},
    };
}

}  // namespace cbs
