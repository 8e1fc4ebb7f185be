#include "seedrefine/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace seedrefine {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

float parse_float(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        float f = std::stof(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return f;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value '" + v + "' for " + key);
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value '" + v + "' for " + key);
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return static_cast<uint64_t>(n);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value '" + v + "' for " + key);
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_int(key, item));
    }
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

void PipelineConfig::check() const {
    auto in_unit = [](float v) { return v > 0.0f && v < 1.0f; };
    if (!in_unit(delta_fg) || !in_unit(delta_bg))
        throw std::invalid_argument("config: delta_fg and delta_bg must lie in (0,1)");
    if (!(delta_bg < delta_fg)) throw std::invalid_argument("config: delta_bg must be < delta_fg");
    if (!in_unit(delta_h) || !in_unit(delta_l))
        throw std::invalid_argument("config: delta_h and delta_l must lie in (0,1)");
    if (!(delta_l < delta_h)) throw std::invalid_argument("config: delta_l must be < delta_h");
    if (pamr_iterations < 0) throw std::invalid_argument("config: pamr_iterations must be >= 0");
    if (pamr_dilations.empty()) throw std::invalid_argument("config: pamr_dilations must be nonempty");
    for (int d : pamr_dilations)
        if (d < 1) throw std::invalid_argument("config: pamr_dilations must be positive");
    if (pamr_sigma_window < 3 || pamr_sigma_window % 2 == 0)
        throw std::invalid_argument("config: pamr_sigma_window must be odd and >= 3");
    if (!(pamr_sigma_sq_floor > 0.0f))
        throw std::invalid_argument("config: pamr_sigma_sq_floor must be positive");
    if (!(canny_low < canny_high)) throw std::invalid_argument("config: canny_low must be < canny_high");
    if (ccl_connectivity != 4 && ccl_connectivity != 8)
        throw std::invalid_argument("config: ccl_connectivity must be 4 or 8");
    if (!(epsilon > 0.0f) || !std::isfinite(epsilon))
        throw std::invalid_argument("config: epsilon must be a small positive real");
    if (scg_max_volume_pixels < 1)
        throw std::invalid_argument("config: scg_max_volume_pixels must be >= 1");
}

PipelineConfig parse_config_text(const std::string& text, PipelineConfig base) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' on line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "delta_fg") base.delta_fg = parse_float(key, val);
        else if (key == "delta_bg") base.delta_bg = parse_float(key, val);
        else if (key == "delta_h") base.delta_h = parse_float(key, val);
        else if (key == "delta_l") base.delta_l = parse_float(key, val);
        else if (key == "pamr_iterations") base.pamr_iterations = parse_int(key, val);
        else if (key == "pamr_dilations") base.pamr_dilations = parse_int_list(key, val);
        else if (key == "pamr_sigma_window") base.pamr_sigma_window = parse_int(key, val);
        else if (key == "pamr_sigma_sq_floor") base.pamr_sigma_sq_floor = parse_float(key, val);
        else if (key == "canny_low") base.canny_low = parse_float(key, val);
        else if (key == "canny_high") base.canny_high = parse_float(key, val);
        else if (key == "ccl_connectivity") base.ccl_connectivity = parse_int(key, val);
        else if (key == "epsilon") base.epsilon = parse_float(key, val);
        else if (key == "rng_seed") base.rng_seed = parse_u64(key, val);
        else if (key == "scg_max_volume_pixels") base.scg_max_volume_pixels = parse_int(key, val);
        else throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                         std::to_string(lineno));
    }
    base.check();
    return base;
}

std::string config_to_text(const PipelineConfig& cfg) {
    std::ostringstream os;
    os << "delta_fg = " << cfg.delta_fg << "\n";
    os << "delta_bg = " << cfg.delta_bg << "\n";
    os << "delta_h = " << cfg.delta_h << "\n";
    os << "delta_l = " << cfg.delta_l << "\n";
    os << "pamr_iterations = " << cfg.pamr_iterations << "\n";
    os << "pamr_dilations = ";
    for (size_t i = 0; i < cfg.pamr_dilations.size(); ++i)
        os << (i ? "," : "") << cfg.pamr_dilations[i];
    os << "\n";
    os << "pamr_sigma_window = " << cfg.pamr_sigma_window << "\n";
    os << "pamr_sigma_sq_floor = " << cfg.pamr_sigma_sq_floor << "\n";
    os << "canny_low = " << cfg.canny_low << "\n";
    os << "canny_high = " << cfg.canny_high << "\n";
    os << "ccl_connectivity = " << cfg.ccl_connectivity << "\n";
    os << "epsilon = " << cfg.epsilon << "\n";
    os << "rng_seed = " << cfg.rng_seed << "\n";
    os << "scg_max_volume_pixels = " << cfg.scg_max_volume_pixels << "\n";
    return os.str();
}

}  // namespace seedrefine
