#include "mlafem/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

namespace mlafem
{

static_assert(std::endian::native == std::endian::little,
              "tensor files are written in host byte order, which must be little-endian");

namespace
{

template <typename T>
void write_raw(const std::filesystem::path &path, std::span<const T> values)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char *>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out)
  {
    throw IoError("failed writing " + path.string());
  }
}

template <typename T>
std::vector<T> read_raw(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(T) != 0)
  {
    throw IoError(path.string() + " size is not a multiple of " + std::to_string(sizeof(T)));
  }
  std::vector<T> values(bytes / sizeof(T));
  in.seekg(0);
  in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in)
  {
    throw IoError("failed reading " + path.string());
  }
  return values;
}

}  // namespace

void write_f64(const std::filesystem::path &path, std::span<const double> values)
{
  write_raw(path, values);
}

std::vector<double> read_f64(const std::filesystem::path &path)
{
  return read_raw<double>(path);
}

void write_u8(const std::filesystem::path &path, std::span<const std::uint8_t> values)
{
  write_raw(path, values);
}

std::vector<std::uint8_t> read_u8(const std::filesystem::path &path)
{
  return read_raw<std::uint8_t>(path);
}

void write_json(const std::filesystem::path &path, const nlohmann::json &value)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out)
  {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << value.dump(1) << '\n';
  if (!out)
  {
    throw IoError("failed writing " + path.string());
  }
}

nlohmann::json read_json(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  try
  {
    return nlohmann::json::parse(in);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

nlohmann::json mesh_to_json(const Mesh &mesh)
{
  nlohmann::json vertices = nlohmann::json::array();
  nlohmann::json parents = nlohmann::json::array();
  for (std::size_t v = 0; v < mesh.num_vertices(); v++)
  {
    const auto &p = mesh.vertex(static_cast<VertexId>(v));
    vertices.push_back({p.x, p.y});
    const auto &par = mesh.vertex_parents(static_cast<VertexId>(v));
    parents.push_back(par[0] == kNone ? nlohmann::json(nullptr) : nlohmann::json(par));
  }
  nlohmann::json triangles = nlohmann::json::array();
  for (auto t : mesh.leaves())
  {
    const auto &tri = mesh.triangle(t);
    triangles.push_back(
        {tri.vertices[0], tri.vertices[1], tri.vertices[2], 2, tri.level});
  }
  return {{"n0", mesh.n0()},
          {"max_level", mesh.max_level()},
          {"vertices", std::move(vertices)},
          {"triangles", std::move(triangles)},
          {"vertex_parents", std::move(parents)}};
}

Mesh mesh_from_json(const nlohmann::json &json)
{
  try
  {
    const int n0 = json.at("n0").get<int>();
    std::vector<Point> vertices;
    for (const auto &p : json.at("vertices"))
    {
      vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    std::vector<Mesh::TriangleRecord> triangles;
    for (const auto &t : json.at("triangles"))
    {
      Mesh::TriangleRecord rec;
      rec.vertices = {t.at(0).get<VertexId>(), t.at(1).get<VertexId>(),
                      t.at(2).get<VertexId>()};
      rec.refinement_edge = t.at(3).get<int>();
      rec.level = t.at(4).get<int>();
      triangles.push_back(rec);
    }
    std::vector<std::array<VertexId, 2>> parents;
    if (json.contains("vertex_parents"))
    {
      for (const auto &p : json.at("vertex_parents"))
      {
        parents.push_back(p.is_null() ? std::array<VertexId, 2>{kNone, kNone}
                                      : p.get<std::array<VertexId, 2>>());
      }
    }
    Mesh mesh = Mesh::from_parts(n0, std::move(vertices), triangles, std::move(parents));
    if (json.contains("max_level") && json.at("max_level").get<int>() != mesh.max_level())
    {
      throw IoError("mesh max_level does not match its vertices");
    }
    return mesh;
  }
  catch (const nlohmann::json::exception &e)
  {
    throw IoError(std::string("malformed mesh JSON: ") + e.what());
  }
}

std::string fnv1a_hex(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mlafem
