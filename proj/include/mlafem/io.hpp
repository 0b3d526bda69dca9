#ifndef MLAFEM_IO_HPP
#define MLAFEM_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>
#include <json.hpp>
#include "mlafem/mesh.hpp"

namespace mlafem
{

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Raw little-endian tensors without a header; shapes live in the JSON manifests.
void write_f64(const std::filesystem::path &path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path &path);
void write_u8(const std::filesystem::path &path, std::span<const std::uint8_t> values);
std::vector<std::uint8_t> read_u8(const std::filesystem::path &path);

void write_json(const std::filesystem::path &path, const nlohmann::json &value);
nlohmann::json read_json(const std::filesystem::path &path);

// {"n0", "max_level", "vertices": [[x, y], ...], "triangles": [[a, b, c, e, level], ...],
//  "vertex_parents": [[p, q] | null, ...]} with the leaves in ascending id order and e the
// local index of the refinement edge (the edge opposite vertex e).
nlohmann::json mesh_to_json(const Mesh &mesh);
Mesh mesh_from_json(const nlohmann::json &json);

// FNV-1a 64-bit digest as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace mlafem

#endif  // MLAFEM_IO_HPP
