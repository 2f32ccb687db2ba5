#include "wcvs/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "wcvs/error.hpp"

namespace wcvs::io {

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

std::ofstream open_out(const fs::path& path, bool binary = true) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return is;
}

template <typename T, typename Fn>
T with_file_context(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    std::string msg = e.what();
    // Strip the code prefix; the constructor adds it back.
    const auto colon = msg.find(": ");
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    throw Error(e.code(), path.string() + ": " + msg);
  }
}

// --- PNM-style header tokens ---

std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) parse_error("unexpected end of header");
  return tok;
}

int header_int(std::istream& is, const char* what) {
  const std::string tok = next_token(is);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    parse_error(std::string("bad ") + what + " '" + tok + "'");
  }
}

std::string read_magic(std::istream& is) {
  std::string magic;
  int c;
  while ((c = is.get()) != EOF && !std::isspace(c)) magic.push_back(static_cast<char>(c));
  if (c != EOF) is.unget();
  return magic;
}

void write_float_le(std::ostream& os, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                        static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

float decode_float(const unsigned char* b, bool little) {
  std::uint32_t bits = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                                 std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24)
                              : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 |
                                 std::uint32_t(b[1]) << 16 | std::uint32_t(b[0]) << 24);
  return std::bit_cast<float>(bits);
}

unsigned char to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

// --- JSON helpers ---

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    parse_error(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

Point3 point_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) parse_error(std::string(what) + " must be a 3-vector");
  return Point3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json point_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) parse_error("color must have 3 components");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const json& j) {
  Intrinsics k{get<double>(j, "fx"), get<double>(j, "fy"), get<double>(j, "cx"),
               get<double>(j, "cy"), get<int>(j, "width"), get<int>(j, "height")};
  try {
    k.validate();
  } catch (const Error& e) {
    parse_error(e.what());
  }
  return k;
}

Camera camera_from_json(const json& j, std::size_t index, std::vector<std::string>* warnings) {
  const Intrinsics k = intrinsics_from_json(j);
  const auto r = get<std::vector<double>>(j, "rotation");
  const auto t = get<std::vector<double>>(j, "translation");
  if (r.size() != 9) parse_error("rotation must have 9 entries");
  if (t.size() != 3) parse_error("translation must have 3 entries");
  Matrix3 rot;
  for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
  const double ortho = orthonormality_error(rot);
  if (!rot.allFinite() || ortho > kRotationReadTolerance || rot.determinant() < 0.0) {
    std::ostringstream os;
    os << "camera " << index << ": not a rotation (orthonormality error " << ortho
       << ", determinant " << rot.determinant() << ")";
    throw Error(ErrorCode::NotARotation, os.str());
  }
  if (ortho > kRotationTolerance || std::abs(rot.determinant() - 1.0) > kRotationTolerance) {
    rot = nearest_rotation(rot);
    if (warnings) {
      std::ostringstream os;
      os << "camera " << index << ": rotation off by " << ortho << ", projected to nearest rotation";
      warnings->push_back(os.str());
    }
  }
  return Camera{k, Pose(rot, Point3(t[0], t[1], t[2]))};
}

std::string policy_name(ColorPolicy p) {
  return p == ColorPolicy::FirstWriteWins ? "first_write_wins" : "running_average";
}

ColorPolicy policy_from_name(const std::string& s) {
  if (s == "first_write_wins") return ColorPolicy::FirstWriteWins;
  if (s == "running_average") return ColorPolicy::RunningAverage;
  parse_error("unknown color policy '" + s + "'");
}

}  // namespace

// --- PLY ---------------------------------------------------------------------

void write_ply(std::ostream& os, const WorldCloud& cloud) {
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
     << "property double x\nproperty double y\nproperty double z\n"
     << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
     << "property uchar colorized\nend_header\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points()[i];
    const Rgb& c = cloud.colors()[i];
    os << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int(to_byte(c[0])) << ' '
       << int(to_byte(c[1])) << ' ' << int(to_byte(c[2])) << ' ' << int(cloud.colorized()[i] ? 1 : 0)
       << '\n';
  }
}

void write_ply(const fs::path& path, const WorldCloud& cloud) {
  auto os = open_out(path);
  write_ply(os, cloud);
}

WorldCloud read_ply(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() {
    if (!std::getline(is, line)) {
      ++line_no;
      fail("unexpected end of file");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  if (line != "ply") fail("missing 'ply' magic");
  long long vertex_count = -1;
  bool in_vertex = false;
  bool format_seen = false;
  std::vector<std::string> props;
  std::size_t elements_before_vertex_lines = 0;
  std::vector<std::pair<std::string, long long>> elements;
  for (;;) {
    next_line();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error(ErrorCode::UnsupportedFormat, "only ASCII PLY is supported");
      format_seen = true;
    } else if (kw == "element") {
      std::string name;
      long long count = -1;
      if (!(ls >> name >> count) || count < 0) fail("malformed element line");
      elements.emplace_back(name, count);
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
    } else if (kw == "property") {
      std::string type, name;
      if (!(ls >> type)) fail("malformed property line");
      if (type == "list") {
        std::string a, b;
        if (!(ls >> a >> b >> name)) fail("malformed list property");
        if (in_vertex) fail("list properties on vertices are not supported");
      } else if (!(ls >> name)) {
        fail("malformed property line");
      }
      if (in_vertex) props.push_back(name);
    } else {
      fail("unknown header keyword '" + kw + "'");
    }
  }
  if (!format_seen) fail("missing format line");
  if (vertex_count < 0) throw Error(ErrorCode::MissingProperty, "no vertex element");

  auto index_of = [&](const char* name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::MissingProperty, "vertex needs x, y and z");
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  const int icol = index_of("colorized");
  if (icol >= 0 && (ir < 0 || ig < 0 || ib < 0)) {
    throw Error(ErrorCode::MissingProperty, "colorized points need red, green and blue");
  }

  // Elements listed before the vertices are skipped line by line.
  for (const auto& [name, count] : elements) {
    if (name == "vertex") break;
    elements_before_vertex_lines += static_cast<std::size_t>(count);
  }
  for (std::size_t i = 0; i < elements_before_vertex_lines; ++i) next_line();

  std::vector<Point3> points;
  std::vector<std::pair<Rgb, bool>> colors;
  points.reserve(static_cast<std::size_t>(vertex_count));
  std::vector<double> values(props.size());
  for (long long v = 0; v < vertex_count; ++v) {
    next_line();
    std::istringstream ls(line);
    for (std::size_t k = 0; k < props.size(); ++k) {
      if (!(ls >> values[k])) fail("expected " + std::to_string(props.size()) + " values");
    }
    points.emplace_back(values[ix], values[iy], values[iz]);
    if (!points.back().allFinite()) fail("non-finite coordinate");
    if (icol >= 0) {
      Rgb c{};
      const int idx[3] = {ir, ig, ib};
      for (int ch = 0; ch < 3; ++ch) {
        const double b = values[idx[ch]];
        if (b < 0 || b > 255 || b != std::floor(b)) fail("color must be a byte");
        c[ch] = b / 255.0;
      }
      colors.emplace_back(c, values[icol] != 0.0);
    }
  }
  WorldCloud cloud(std::move(points));
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (colors[i].second) cloud.set_color(i, colors[i].first);
  }
  return cloud;
}

WorldCloud read_ply(const fs::path& path) {
  return with_file_context<WorldCloud>(path, [&] {
    auto is = open_in(path);
    return read_ply(is);
  });
}

// --- trajectories ------------------------------------------------------------

json trajectory_to_json(const std::vector<Camera>& cams) {
  json list = json::array();
  for (const Camera& c : cams) {
    json j = intrinsics_to_json(c.intrinsics);
    std::vector<double> r(9);
    for (int i = 0; i < 9; ++i) r[static_cast<std::size_t>(i)] = c.pose.rotation()(i / 3, i % 3);
    j["rotation"] = r;
    j["translation"] = {c.pose.translation().x(), c.pose.translation().y(), c.pose.translation().z()};
    list.push_back(std::move(j));
  }
  return {{"cameras", list}};
}

std::vector<Camera> trajectory_from_json(const json& j, std::vector<std::string>* warnings) {
  const json& list = j.is_array() ? j : field(j, "cameras");
  if (!list.is_array()) parse_error("'cameras' must be an array");
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < list.size(); ++i) cams.push_back(camera_from_json(list[i], i, warnings));
  return cams;
}

void write_trajectory(const fs::path& path, const std::vector<Camera>& cams) {
  write_json(path, trajectory_to_json(cams));
}

std::vector<Camera> read_trajectory(const fs::path& path, std::vector<std::string>* warnings) {
  return with_file_context<std::vector<Camera>>(path, [&] { return trajectory_from_json(read_json(path), warnings); });
}

// --- images --------------------------------------------------------------------

void write_pfm(std::ostream& os, const Image& img) {
  const char* magic = img.channels() == 1 ? "Pf" : img.channels() == 2 ? "PF2" : img.channels() == 3 ? "PF" : nullptr;
  if (!magic) throw Error(ErrorCode::UnsupportedFormat, "PFM holds 1, 2 or 3 channels");
  os << magic << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
  for (int y = img.height() - 1; y >= 0; --y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) write_float_le(os, static_cast<float>(img.at(y, x, c)));
}

Image read_pfm(std::istream& is) {
  const std::string magic = read_magic(is);
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF2") channels = 2;
  else if (magic == "PF") channels = 3;
  else throw Error(ErrorCode::UnsupportedFormat, "not a PFM file (magic '" + magic + "')");
  const int width = header_int(is, "width");
  const int height = header_int(is, "height");
  const std::string scale_tok = next_token(is);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    parse_error("bad PFM scale '" + scale_tok + "'");
  }
  if (scale == 0.0) parse_error("PFM scale must be non-zero");
  const bool little = scale < 0.0;
  Image img(height, width, channels);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels * 4);
  for (int y = height - 1; y >= 0; --y) {
    if (!is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()))) {
      parse_error("truncated PFM data");
    }
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(y, x, c) = decode_float(&row[(static_cast<std::size_t>(x) * channels + c) * 4], little);
  }
  return img;
}

void write_ppm(std::ostream& os, const Frame& frame) {
  check_frame(frame);
  os << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  for (double v : frame.data()) os.put(static_cast<char>(to_byte(v)));
}

Frame read_ppm(std::istream& is) {
  const std::string magic = read_magic(is);
  if (magic != "P6") throw Error(ErrorCode::UnsupportedFormat, "not a binary PPM (magic '" + magic + "')");
  const int width = header_int(is, "width");
  const int height = header_int(is, "height");
  const int maxval = header_int(is, "maxval");
  if (maxval != 255) throw Error(ErrorCode::UnsupportedFormat, "only 8-bit PPM is supported");
  Frame f(height, width, 3);
  for (double& v : f.data()) {
    const int c = is.get();
    if (c == EOF) parse_error("truncated PPM data");
    v = c / 255.0;
  }
  return f;
}

void write_pgm(std::ostream& os, const LabelMap& labels) {
  int maxid = 0;
  for (int v : labels.ids) {
    if (v < 0 || v > 65535) throw Error(ErrorCode::OutOfRange, "label outside [0, 65535]");
    maxid = std::max(maxid, v);
  }
  const int maxval = maxid > 255 ? 65535 : 255;
  os << "P5\n" << labels.width << ' ' << labels.height << '\n' << maxval << '\n';
  for (int v : labels.ids) {
    if (maxval > 255) os.put(static_cast<char>(v >> 8));
    os.put(static_cast<char>(v & 0xFF));
  }
}

LabelMap read_pgm(std::istream& is) {
  const std::string magic = read_magic(is);
  if (magic != "P5") throw Error(ErrorCode::UnsupportedFormat, "not a binary PGM (magic '" + magic + "')");
  LabelMap m;
  m.width = header_int(is, "width");
  m.height = header_int(is, "height");
  const int maxval = header_int(is, "maxval");
  if (maxval > 65535) parse_error("PGM maxval too large");
  m.ids.resize(static_cast<std::size_t>(m.width) * m.height);
  for (int& v : m.ids) {
    int hi = 0;
    if (maxval > 255) hi = is.get();
    const int lo = is.get();
    if (lo == EOF || hi == EOF) parse_error("truncated PGM data");
    v = (hi << 8) | lo;
  }
  return m;
}

void write_pbm(std::ostream& os, const Mask& mask) {
  os << "P4\n" << mask.width() << ' ' << mask.height() << '\n';
  for (int y = 0; y < mask.height(); ++y) {
    unsigned char byte = 0;
    int bit = 0;
    for (int x = 0; x < mask.width(); ++x) {
      byte = static_cast<unsigned char>(byte | ((mask.at(y, x) ? 1 : 0) << (7 - bit)));
      if (++bit == 8) {
        os.put(static_cast<char>(byte));
        byte = 0;
        bit = 0;
      }
    }
    if (bit) os.put(static_cast<char>(byte));
  }
}

Mask read_pbm(std::istream& is) {
  const std::string magic = read_magic(is);
  if (magic != "P4") throw Error(ErrorCode::UnsupportedFormat, "not a binary PBM (magic '" + magic + "')");
  const int width = header_int(is, "width");
  const int height = header_int(is, "height");
  Mask m(height, width);
  const int row_bytes = (width + 7) / 8;
  for (int y = 0; y < height; ++y) {
    for (int b = 0; b < row_bytes; ++b) {
      const int byte = is.get();
      if (byte == EOF) parse_error("truncated PBM data");
      for (int bit = 0; bit < 8; ++bit) {
        const int x = b * 8 + bit;
        if (x < width) m.at(y, x) = (byte >> (7 - bit)) & 1;
      }
    }
  }
  return m;
}

#define WCVS_FILE_WRITER(fn, type)                 \
  void fn(const fs::path& path, const type& value) { \
    auto os = open_out(path);                      \
    fn(os, value);                                 \
  }
#define WCVS_FILE_READER(fn, type)                                     \
  type fn(const fs::path& path) {                                      \
    return with_file_context<type>(path, [&] {                         \
      auto is = open_in(path);                                         \
      return fn(is);                                                   \
    });                                                                \
  }
WCVS_FILE_WRITER(write_pfm, Image)
WCVS_FILE_READER(read_pfm, Image)
WCVS_FILE_WRITER(write_ppm, Frame)
WCVS_FILE_READER(read_ppm, Frame)
WCVS_FILE_WRITER(write_pgm, LabelMap)
WCVS_FILE_READER(read_pgm, LabelMap)
WCVS_FILE_WRITER(write_pbm, Mask)
WCVS_FILE_READER(read_pbm, Mask)
#undef WCVS_FILE_WRITER
#undef WCVS_FILE_READER

Image read_image(const fs::path& path) {
  return with_file_context<Image>(path, [&]() -> Image {
    auto is = open_in(path);
    char magic[2] = {0, 0};
    is.read(magic, 2);
    is.seekg(0);
    if (magic[0] == 'P' && (magic[1] == 'F' || magic[1] == 'f')) return read_pfm(is);
    if (magic[0] == 'P' && magic[1] == '6') return read_ppm(is);
    if (magic[0] == 'P' && magic[1] == '5') {
      const LabelMap m = read_pgm(is);
      Image img(m.height, m.width, 1);
      for (std::size_t i = 0; i < m.ids.size(); ++i) img.data()[i] = m.ids[i];
      return img;
    }
    if (magic[0] == 'P' && magic[1] == '4') {
      const Mask m = read_pbm(is);
      Image img(m.height(), m.width(), 1);
      for (std::size_t i = 0; i < m.data().size(); ++i) img.data()[i] = m.data()[i];
      return img;
    }
    throw Error(ErrorCode::UnsupportedFormat, "unrecognized image magic");
  });
}

void write_flow(const fs::path& pfm_path, const fs::path& pbm_path, const FlowField& flow) {
  write_pfm(pfm_path, flow.displacement());
  write_pbm(pbm_path, flow.valid());
}

FlowField read_flow(const fs::path& pfm_path, const std::optional<fs::path>& pbm_path) {
  Image d = read_pfm(pfm_path);
  if (d.channels() != 2) throw Error(ErrorCode::UnsupportedFormat, pfm_path.string() + ": flow needs 2 channels");
  Mask valid = pbm_path ? read_pbm(*pbm_path) : Mask(d.height(), d.width(), 1);
  return FlowField(std::move(d), std::move(valid));
}

void write_guidance(const fs::path& dir, const std::string& stem, const GuidanceImage& g) {
  write_pfm(dir / (stem + ".pfm"), g.rgb);
  write_pfm(dir / (stem + "_depth.pfm"), g.depth);
  write_pbm(dir / (stem + "_valid.pbm"), g.valid);
  write_ppm(dir / (stem + ".ppm"), g.rgb);
}

GuidanceImage read_guidance(const fs::path& dir, const std::string& stem) {
  GuidanceImage g{read_pfm(dir / (stem + ".pfm")), read_pbm(dir / (stem + "_valid.pbm")),
                  read_pfm(dir / (stem + "_depth.pfm"))};
  if (g.rgb.channels() != 3 || g.depth.channels() != 1 || g.valid.height() != g.rgb.height() ||
      g.valid.width() != g.rgb.width()) {
    throw Error(ErrorCode::ShapeMismatch, "guidance files for '" + stem + "' are inconsistent");
  }
  return g;
}

// --- specs ---------------------------------------------------------------------

json scene_to_json(const SceneSpec& scene) {
  json quads = json::array();
  for (const Quad& q : scene.quads) {
    json corners = json::array();
    for (const auto& c : q.corners) corners.push_back(point_to_json(c));
    json tex = {{"kind", q.texture.kind == Texture::Kind::Solid ? "solid" : "checker"},
                {"color_a", q.texture.color_a},
                {"color_b", q.texture.color_b},
                {"period", q.texture.period}};
    quads.push_back({{"corners", corners}, {"texture", tex}, {"semantic_id", q.semantic_id}});
  }
  return {{"seed", scene.seed}, {"quads", quads}};
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  for (const json& q : field(j, "quads")) {
    Quad quad;
    const json& corners = field(q, "corners");
    if (!corners.is_array() || corners.size() != 4) parse_error("a quad needs 4 corners");
    for (std::size_t i = 0; i < 4; ++i) quad.corners[i] = point_from_json(corners[i], "corner");
    quad.semantic_id = get_or<int>(q, "semantic_id", 1);
    if (q.contains("texture")) {
      const json& t = q.at("texture");
      const auto kind = get_or<std::string>(t, "kind", "solid");
      if (kind == "solid") quad.texture.kind = Texture::Kind::Solid;
      else if (kind == "checker") quad.texture.kind = Texture::Kind::Checker;
      else parse_error("unknown texture kind '" + kind + "'");
      if (t.contains("color_a")) quad.texture.color_a = rgb_from_json(t.at("color_a"));
      if (t.contains("color_b")) quad.texture.color_b = rgb_from_json(t.at("color_b"));
      quad.texture.period = get_or<double>(t, "period", 1.0);
    }
    s.quads.push_back(quad);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    parse_error(e.what());
  }
  return s;
}

namespace {
const std::map<TrajectorySpec::Kind, std::string>& kind_names() {
  static const std::map<TrajectorySpec::Kind, std::string> m{
      {TrajectorySpec::Kind::Linear, "linear"},
      {TrajectorySpec::Kind::Orbit, "orbit"},
      {TrajectorySpec::Kind::RoundTrip, "round_trip"},
      {TrajectorySpec::Kind::StereoPair, "stereo_pair"}};
  return m;
}
}  // namespace

json trajectory_spec_to_json(const TrajectorySpec& s) {
  return {{"kind", kind_names().at(s.kind)},
          {"frames", s.frames},
          {"intrinsics", intrinsics_to_json(s.intrinsics)},
          {"up", point_to_json(s.up)},
          {"start_eye", point_to_json(s.start_eye)},
          {"start_target", point_to_json(s.start_target)},
          {"end_eye", point_to_json(s.end_eye)},
          {"end_target", point_to_json(s.end_target)},
          {"center", point_to_json(s.center)},
          {"radius", s.radius},
          {"height", s.height},
          {"start_angle", s.start_angle},
          {"end_angle", s.end_angle},
          {"baseline", s.baseline}};
}

TrajectorySpec trajectory_spec_from_json(const json& j) {
  TrajectorySpec s;
  const auto kind = get<std::string>(j, "kind");
  bool found = false;
  for (const auto& [k, name] : kind_names()) {
    if (name == kind) {
      s.kind = k;
      found = true;
    }
  }
  if (!found) parse_error("unknown trajectory kind '" + kind + "'");
  s.frames = get<int>(j, "frames");
  s.intrinsics = intrinsics_from_json(field(j, "intrinsics"));
  auto point_or = [&](const char* key, const Point3& fallback) {
    return j.contains(key) ? point_from_json(j.at(key), key) : fallback;
  };
  s.up = point_or("up", s.up);
  s.start_eye = point_or("start_eye", s.start_eye);
  s.start_target = point_or("start_target", s.start_target);
  s.end_eye = point_or("end_eye", s.start_eye);
  s.end_target = point_or("end_target", s.start_target);
  s.center = point_or("center", s.center);
  s.radius = get_or<double>(j, "radius", s.radius);
  s.height = get_or<double>(j, "height", s.height);
  s.start_angle = get_or<double>(j, "start_angle", s.start_angle);
  s.end_angle = get_or<double>(j, "end_angle", s.start_angle);
  s.baseline = get_or<double>(j, "baseline", s.baseline);
  return s;
}

json network_spec_to_json(const NetworkSpec& s) {
  return {{"role", to_string(s.role)},
          {"input_channels", s.input_channels},
          {"widths", s.widths},
          {"condition_widths", s.condition_widths},
          {"target_widths", s.target_widths},
          {"height", s.height},
          {"width", s.width},
          {"style_dim", s.style_dim},
          {"video_window", s.video_window},
          {"num_scales", s.num_scales},
          {"seed", s.seed}};
}

NetworkSpec network_spec_from_json(const json& j) {
  NetworkSpec s;
  s.role = role_from_string(get<std::string>(j, "role"));
  s.input_channels = get<int>(j, "input_channels");
  s.widths = get<std::vector<int>>(j, "widths");
  s.condition_widths = get_or<std::vector<int>>(j, "condition_widths", {});
  s.target_widths = get_or<std::vector<int>>(j, "target_widths", {});
  s.height = get_or<int>(j, "height", s.height);
  s.width = get_or<int>(j, "width", s.width);
  s.style_dim = get_or<int>(j, "style_dim", s.style_dim);
  s.video_window = get_or<int>(j, "video_window", s.video_window);
  s.num_scales = get_or<int>(j, "num_scales", s.num_scales);
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.validate();
  return s;
}

json loss_weights_to_json(const LossWeights& w) {
  return {{"image", w.image},         {"video", w.video}, {"feature_matching", w.feature_matching},
          {"perceptual", w.perceptual}, {"flow", w.flow},   {"world", w.world}};
}

LossWeights loss_weights_from_json(const json& j) {
  LossWeights w;
  w.image = get_or<double>(j, "image", w.image);
  w.video = get_or<double>(j, "video", w.video);
  w.feature_matching = get_or<double>(j, "feature_matching", w.feature_matching);
  w.perceptual = get_or<double>(j, "perceptual", w.perceptual);
  w.flow = get_or<double>(j, "flow", w.flow);
  w.world = get_or<double>(j, "world", w.world);
  w.validate();
  return w;
}

std::vector<Camera> load_cameras(const fs::path& path, std::vector<std::string>* warnings) {
  return with_file_context<std::vector<Camera>>(path, [&] {
    const json j = read_json(path);
    if (j.is_object() && j.contains("kind")) return make_trajectory(trajectory_spec_from_json(j));
    return trajectory_from_json(j, warnings);
  });
}

// --- weights -------------------------------------------------------------------

void write_weights(const fs::path& stem, const NetworkSpec& spec,
                   const std::vector<ConstNamedTensor>& params) {
  fs::path bin = stem;
  bin += ".bin";
  fs::path manifest = stem;
  manifest += ".json";
  auto os = open_out(bin);
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params) {
    for (double v : t->data()) write_float_le(os, static_cast<float>(v));
    tensors.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}, {"count", t->size()}});
    offset += t->size();
  }
  write_json(manifest, {{"spec", network_spec_to_json(spec)},
                        {"dtype", "float32"},
                        {"byte_order", "little"},
                        {"blob", bin.filename().string()},
                        {"tensors", tensors}});
}

void read_weights(const fs::path& stem, const std::vector<NamedTensor>& params) {
  fs::path manifest_path = stem;
  manifest_path += ".json";
  const json manifest = read_json(manifest_path);
  if (get<std::string>(manifest, "dtype") != "float32" || get<std::string>(manifest, "byte_order") != "little") {
    throw Error(ErrorCode::UnsupportedFormat, "weights must be little-endian float32");
  }
  const json& tensors = field(manifest, "tensors");
  if (tensors.size() != params.size()) parse_error("weight manifest tensor count mismatch");
  auto is = open_in(manifest_path.parent_path() / get<std::string>(manifest, "blob"));
  std::vector<char> blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& t = tensors[i];
    Tensor& target = *params[i].second;
    if (get<std::string>(t, "name") != params[i].first || get<std::vector<int>>(t, "shape") != target.shape()) {
      parse_error("weight tensor " + std::to_string(i) + " does not match '" + params[i].first + "'");
    }
    const auto offset = get<std::size_t>(t, "offset");
    if ((offset + target.size()) * 4 > blob.size()) parse_error("weight blob is truncated");
    for (std::size_t k = 0; k < target.size(); ++k) {
      target[k] = decode_float(reinterpret_cast<const unsigned char*>(&blob[(offset + k) * 4]), true);
    }
  }
}

json consistency_to_json(const ConsistencyReport& r) {
  return {{"delta_rgb", r.delta_rgb}, {"delta_lab", r.delta_lab}, {"pixel_count", r.pixel_count}};
}

json read_json(const fs::path& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto os = open_out(path, false);
  os << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path, false);
  os << text;
}

// --- manifest ------------------------------------------------------------------

ProjectManifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return (fs::path(p).is_absolute() ? fs::path(p) : base / p).lexically_normal(); };
  auto existing = [&](const char* key) -> std::optional<fs::path> {
    if (!j.contains(key)) return std::nullopt;
    fs::path p = resolve(get<std::string>(j, key));
    if (!fs::exists(p)) throw Error(ErrorCode::IoError, std::string(key) + " not found: " + p.string());
    return p;
  };
  return with_file_context<ProjectManifest>(path, [&] {
    ProjectManifest m;
    m.scene = existing("scene");
    m.cloud = existing("cloud");
    m.frames_dir = existing("frames_dir");
    const auto traj = existing("trajectory");
    if (!traj) parse_error("missing field 'trajectory'");
    m.trajectory = *traj;
    m.output_dir = resolve(get<std::string>(j, "output_dir"));
    if (!m.cloud && !m.scene) parse_error("either 'cloud' or 'scene' is required");
    if (!m.frames_dir && !m.scene) parse_error("either 'frames_dir' or 'scene' is required");
    m.density = get_or<double>(j, "density", m.density);
    m.round_trip = get_or<bool>(j, "round_trip", m.round_trip);
    m.color_policy = policy_from_name(get_or<std::string>(j, "color_policy", "first_write_wins"));
    if (j.contains("loss_weights")) m.loss_weights = loss_weights_from_json(j.at("loss_weights"));
    m.seed = get_or<std::uint64_t>(j, "seed", m.seed);
    m.label_channels = get_or<int>(j, "label_channels", m.label_channels);
    m.generator_widths = get_or<std::vector<int>>(j, "generator_widths", m.generator_widths);
    return m;
  });
}

json manifest_to_json(const ProjectManifest& m) {
  json j = {{"trajectory", m.trajectory.string()},
            {"output_dir", m.output_dir.string()},
            {"density", m.density},
            {"round_trip", m.round_trip},
            {"color_policy", policy_name(m.color_policy)},
            {"loss_weights", loss_weights_to_json(m.loss_weights)},
            {"seed", m.seed},
            {"label_channels", m.label_channels},
            {"generator_widths", m.generator_widths}};
  if (m.scene) j["scene"] = m.scene->string();
  if (m.cloud) j["cloud"] = m.cloud->string();
  if (m.frames_dir) j["frames_dir"] = m.frames_dir->string();
  return j;
}

std::string frame_name(const std::string& prefix, std::size_t index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu", index);
  return prefix + buf + ext;
}

}  // namespace wcvs::io
