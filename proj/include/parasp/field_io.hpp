#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasp/grid.hpp"

namespace parasp {

// All file writes go through a temp-file-then-rename so interrupted runs
// leave no torn outputs.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename failed for " + target.string() + ": " + ec.message());
}

inline nlohmann::json grid_json(const Grid& g) {
  return {{"n", g.n},
          {"h", g.h},
          {"space_half", g.space_half},
          {"time_half", g.time_half},
          {"origin_x", g.origin_x},
          {"origin_t", g.origin_t}};
}

inline Grid grid_from_json(const nlohmann::json& j) {
  return Grid(j.at("n").get<int>(), j.at("h").get<double>(),
              j.at("space_half").get<std::vector<double>>(), j.at("time_half").get<double>(),
              j.value("origin_x", std::vector<double>{}), j.value("origin_t", 0.0));
}

// Field file format: one JSON header line terminated by '\n', then the raw
// payload as little-endian 64-bit floats in row-major order with axis order
// (x_1, ..., x_n, t), time fastest. Vector fields store their components
// one after another, each a full grid's worth of values.
inline void write_field_file(const std::string& path, const Grid& g,
                             const std::vector<const std::vector<double>*>& components,
                             const std::string& kind) {
  nlohmann::json hdr = {{"format", "parasp-field"},
                        {"version", 1},
                        {"kind", kind},
                        {"components", components.size()},
                        {"grid", grid_json(g)}};
  std::string blob = hdr.dump();
  blob.push_back('\n');
  for (const auto* c : components) {
    if (static_cast<Index>(c->size()) != g.total) throw IoError("field size mismatch on write");
    blob.append(reinterpret_cast<const char*>(c->data()), c->size() * sizeof(double));
  }
  write_file_atomic(path, blob);
}

inline void write_scalar_field(const std::string& path, const ScalarField& f,
                               const std::string& kind = "scalar") {
  write_field_file(path, f.grid, {&f.v}, kind);
}

inline void write_vector_field(const std::string& path, const VectorField& f,
                               const std::string& kind = "vector") {
  std::vector<const std::vector<double>*> comps;
  for (const auto& c : f.comp) comps.push_back(&c.v);
  write_field_file(path, f.grid(), comps, kind);
}

struct FieldFile {
  Grid grid;
  std::string kind;
  std::vector<std::vector<double>> components;
};

inline FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("missing header line: " + path);
  nlohmann::json hdr;
  try {
    hdr = nlohmann::json::parse(header);
  } catch (const std::exception& e) {
    throw IoError("bad field header in " + path + ": " + e.what());
  }
  if (hdr.value("format", "") != "parasp-field")
    throw IoError("not a parasp field file: " + path);
  FieldFile ff;
  ff.grid = grid_from_json(hdr.at("grid"));
  ff.kind = hdr.value("kind", "scalar");
  std::size_t ncomp = hdr.at("components").get<std::size_t>();
  ff.components.resize(ncomp);
  for (auto& c : ff.components) {
    c.resize(ff.grid.total);
    in.read(reinterpret_cast<char*>(c.data()),
            static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!in) throw IoError("truncated field payload: " + path);
  }
  return ff;
}

inline ScalarField read_scalar_field(const std::string& path) {
  FieldFile ff = read_field_file(path);
  if (ff.components.size() != 1) throw IoError("expected scalar field: " + path);
  ScalarField f(ff.grid);
  f.v = std::move(ff.components[0]);
  return f;
}

inline VectorField read_vector_field(const std::string& path) {
  FieldFile ff = read_field_file(path);
  if (ff.components.size() != static_cast<std::size_t>(ff.grid.n))
    throw IoError("expected n-component vector field: " + path);
  VectorField f(ff.grid);
  for (int k = 0; k < ff.grid.n; ++k) f.comp[k].v = std::move(ff.components[k]);
  return f;
}

}  // namespace parasp
