#include "ori/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ori {

using nlohmann::json;

static std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_obj(const QuadMesh& mesh, const std::string& path) {
    std::ostringstream os;
    for (int i = 0; i < mesh.rows(); ++i)
        for (int j = 0; j < mesh.cols(); ++j) {
            const Vec3& p = mesh.at(i, j);
            os << "v " << fmt17(p.x()) << ' ' << fmt17(p.y()) << ' '
               << fmt17(p.z()) << '\n';
        }
    auto vid = [&](int i, int j) { return i * mesh.cols() + j + 1; };
    for (int i = 0; i + 1 < mesh.rows(); ++i)
        for (int j = 0; j + 1 < mesh.cols(); ++j)
            os << "f " << vid(i, j) << ' ' << vid(i + 1, j) << ' '
               << vid(i + 1, j + 1) << ' ' << vid(i, j + 1) << '\n';
    write_text_file(path, os.str());
}

std::string mesh_to_json(const QuadMesh& mesh) {
    json j;
    j["rows"] = mesh.rows();
    j["cols"] = mesh.cols();
    j["units"] = "radians-internal, positions dimensionless";
    json pos = json::array();
    for (int i = 0; i < mesh.rows(); ++i)
        for (int k = 0; k < mesh.cols(); ++k) {
            const Vec3& p = mesh.at(i, k);
            pos.push_back({p.x(), p.y(), p.z()});
        }
    j["positions"] = pos;
    return j.dump(2);
}

QuadMesh mesh_from_json(const std::string& text) {
    json j = json::parse(text);
    int r = j.at("rows"), c = j.at("cols");
    QuadMesh m(r, c);
    const auto& pos = j.at("positions");
    if (static_cast<int>(pos.size()) != r * c)
        throw IoError("mesh json: position count mismatch");
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < c; ++k) {
            const auto& p = pos[static_cast<size_t>(i) * c + k];
            m.at(i, k) = Vec3(p[0], p[1], p[2]);
        }
    return m;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace ori
