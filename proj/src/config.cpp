#include "scorespace/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scorespace {

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_scalar(const std::string& raw) {
    const std::string v = strip(raw);
    if (v.empty()) throw std::invalid_argument("toml: empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw std::invalid_argument("toml: unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: throw std::invalid_argument("toml: unsupported escape");
                }
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        std::size_t pos = 0;
        if (v.find_first_of(".eE") == std::string::npos) {
            const long long i = std::stoll(v, &pos);
            if (pos == v.size()) return i;
        }
        const double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("toml: cannot parse value: " + v);
}

nlohmann::json parse_value(const std::string& raw) {
    const std::string v = strip(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw std::invalid_argument("toml: unterminated array");
        auto arr = nlohmann::json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_string = false;
        for (char c : body) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!strip(cur).empty()) arr.push_back(parse_scalar(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) arr.push_back(parse_scalar(cur));
        return arr;
    }
    return parse_scalar(v);
}

nlohmann::json* section_for(nlohmann::json& root, const std::string& dotted) {
    nlohmann::json* node = &root;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        part = strip(part);
        if (part.empty()) throw std::invalid_argument("toml: empty section segment");
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
    }
    return node;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* section = &root;

    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = strip(strip_comment(line));
        if (line.empty()) continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw std::invalid_argument("toml: unterminated section");
                section = section_for(root, line.substr(1, line.size() - 2));
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("toml: expected key = value");
            const std::string key = strip(line.substr(0, eq));
            if (key.empty()) throw std::invalid_argument("toml: empty key");
            (*section)[key] = parse_value(line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string(e.what()) + " (line " +
                                        std::to_string(line_no) + ")");
        }
    }
    return root;
}

nlohmann::json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    if (path.extension() == ".json") return nlohmann::json::parse(buffer.str());
    return parse_toml(buffer.str());
}

}  // namespace scorespace
