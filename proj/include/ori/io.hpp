#pragma once

#include <string>

#include "ori/mesh.hpp"

namespace ori {

// OBJ export, byte-stable across runs (fixed %.17g formatting).
void write_obj(const QuadMesh& mesh, const std::string& path);

std::string mesh_to_json(const QuadMesh& mesh);
QuadMesh mesh_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace ori
