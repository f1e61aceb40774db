#include "camsim/asset_parser.hpp"

#include <Eigen/Geometry>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace camsim {

namespace {

struct Token {
  enum Kind { kIdent, kString, kNumber, kOpenBracket, kCloseBracket, kEnd };
  Kind kind = kEnd;
  std::string text;
  double number = 0.0;
  int line = 0, col = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }
  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws_and_comments();
    current_ = Token{};
    current_.line = line_;
    current_.col = col_;
    if (pos_ >= text_.size()) {
      current_.kind = Token::kEnd;
      return;
    }
    const char c = text_[pos_];
    if (c == '[') {
      current_.kind = Token::kOpenBracket;
      step();
      return;
    }
    if (c == ']') {
      current_.kind = Token::kCloseBracket;
      step();
      return;
    }
    if (c == '"') {
      step();
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\n')
          throw ParseError("unterminated string", current_.line, current_.col);
        s.push_back(text_[pos_]);
        step();
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated string", current_.line, current_.col);
      step();  // closing quote
      current_.kind = Token::kString;
      current_.text = std::move(s);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        s.push_back(text_[pos_]);
        step();
      }
      current_.kind = Token::kIdent;
      current_.text = std::move(s);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
        c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '-' || text_[pos_] == '+' || text_[pos_] == '.' ||
              text_[pos_] == 'e' || text_[pos_] == 'E')) {
        step();
      }
      const std::string_view sv(text_.data() + start, pos_ - start);
      double value = 0.0;
      auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
      if (ec != std::errc{} || p != sv.data() + sv.size())
        throw ParseError("malformed number '" + std::string(sv) + "'",
                         current_.line, current_.col);
      current_.kind = Token::kNumber;
      current_.number = value;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_,
                     col_);
  }

  void skip_ws_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') step();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        step();
      } else {
        break;
      }
    }
  }

  void step() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token current_;
};

struct ParamValue {
  std::vector<double> numbers;
  std::vector<std::string> strings;
  int line = 0;
};

// Parameter list: zero or more '"type name" value' entries, where value is
// a single atom or a bracketed list.
std::map<std::string, std::pair<std::string, ParamValue>> parse_params(
    Lexer& lex) {
  std::map<std::string, std::pair<std::string, ParamValue>> params;
  while (lex.peek().kind == Token::kString) {
    Token decl = lex.take();
    std::istringstream ds(decl.text);
    std::string type, name;
    if (!(ds >> type >> name))
      throw ParseError("parameter declaration must be \"type name\"",
                       decl.line, decl.col);
    ParamValue value;
    value.line = decl.line;
    auto take_atom = [&](const Token& t) {
      if (t.kind == Token::kNumber)
        value.numbers.push_back(t.number);
      else if (t.kind == Token::kString)
        value.strings.push_back(t.text);
      else
        throw ParseError("expected parameter value", t.line, t.col);
    };
    if (lex.peek().kind == Token::kOpenBracket) {
      lex.take();
      while (lex.peek().kind != Token::kCloseBracket) {
        if (lex.peek().kind == Token::kEnd)
          throw ParseError("unterminated '[' list", decl.line, decl.col);
        take_atom(lex.take());
      }
      lex.take();  // ']'
    } else {
      take_atom(lex.take());
    }
    params[name] = {type, std::move(value)};
  }
  return params;
}

Spectrum spectrum_from_pairs(const std::vector<double>& flat, int line,
                             const WavelengthGrid& grid) {
  if (flat.empty() || flat.size() % 2 != 0)
    throw ParseError("spectrum values must be wavelength/value pairs", line);
  std::vector<std::pair<double, double>> table;
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    if (!table.empty() && flat[i] <= table.back().first)
      throw ParseError("spectrum wavelengths must be strictly increasing",
                       line);
    table.emplace_back(flat[i], flat[i + 1]);
  }
  return sample_piecewise_linear(table, grid);
}

struct AttributeState {
  Eigen::Affine3d ctm = Eigen::Affine3d::Identity();
  std::string material;
};

}  // namespace

AssetDescription parse_asset(const std::string& text,
                             const WavelengthGrid& grid) {
  Lexer lex(text);
  AssetDescription asset;
  bool saw_asset_decl = false;

  std::vector<AttributeState> stack;
  stack.push_back(AttributeState{});

  auto expect_numbers = [](Lexer& l, int n, const char* what) {
    std::vector<double> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      Token t = l.take();
      if (t.kind != Token::kNumber)
        throw ParseError(std::string("expected number in ") + what, t.line,
                         t.col);
      out.push_back(t.number);
    }
    return out;
  };

  while (lex.peek().kind != Token::kEnd) {
    Token t = lex.take();
    if (t.kind != Token::kIdent)
      throw ParseError("expected a directive", t.line, t.col);
    const std::string& d = t.text;

    if (d == "Asset") {
      Token id = lex.take();
      Token cls = lex.take();
      if (id.kind != Token::kString || cls.kind != Token::kString)
        throw ParseError("Asset expects \"id\" \"class\"", t.line, t.col);
      asset.asset_id = id.text;
      try {
        asset.class_label = class_label_from_string(cls.text);
      } catch (const Error& e) {
        throw ParseError(e.what(), cls.line, cls.col);
      }
      saw_asset_decl = true;
    } else if (d == "AttributeBegin") {
      stack.push_back(stack.back());
    } else if (d == "AttributeEnd") {
      if (stack.size() <= 1)
        throw ParseError("AttributeEnd without AttributeBegin", t.line, t.col);
      stack.pop_back();
    } else if (d == "Translate") {
      auto v = expect_numbers(lex, 3, "Translate");
      stack.back().ctm.translate(Vec3(v[0], v[1], v[2]));
    } else if (d == "Rotate") {
      auto v = expect_numbers(lex, 4, "Rotate");
      const Vec3 axis(v[1], v[2], v[3]);
      if (axis.norm() < 1e-12)
        throw ParseError("Rotate axis must be nonzero", t.line, t.col);
      stack.back().ctm.rotate(Eigen::AngleAxisd(
          v[0] * std::numbers::pi / 180.0, axis.normalized()));
    } else if (d == "Scale") {
      auto v = expect_numbers(lex, 3, "Scale");
      stack.back().ctm.scale(Vec3(v[0], v[1], v[2]));
    } else if (d == "Transform") {
      Token open = lex.take();
      if (open.kind != Token::kOpenBracket)
        throw ParseError("Transform expects a [16-float] matrix", t.line,
                         t.col);
      auto v = expect_numbers(lex, 16, "Transform");
      Token close = lex.take();
      if (close.kind != Token::kCloseBracket)
        throw ParseError("Transform matrix must have exactly 16 entries",
                         close.line, close.col);
      Eigen::Matrix4d m;  // column-major entry order, PBRT convention
      for (int cidx = 0; cidx < 4; ++cidx)
        for (int r = 0; r < 4; ++r) m(r, cidx) = v[cidx * 4 + r];
      stack.back().ctm = stack.back().ctm * Eigen::Affine3d(m);
    } else if (d == "MakeNamedMaterial") {
      Token name = lex.take();
      if (name.kind != Token::kString)
        throw ParseError("MakeNamedMaterial expects a \"name\"", t.line,
                         t.col);
      auto params = parse_params(lex);
      auto type_it = params.find("type");
      if (type_it == params.end() || type_it->second.second.strings.size() != 1)
        throw ParseError("material '" + name.text +
                             "' needs a \"string type\" parameter",
                         name.line, name.col);
      MaterialSpec mat;
      const std::string& kind = type_it->second.second.strings[0];
      if (kind == "diffuse")
        mat.kind = MaterialKind::diffuse;
      else if (kind == "retroreflective")
        mat.kind = MaterialKind::retroreflective;
      else if (kind == "emissive")
        mat.kind = MaterialKind::emissive;
      else
        throw ParseError("unknown material type '" + kind + "'", name.line,
                         name.col);
      const char* spectral_param =
          mat.kind == MaterialKind::emissive ? "emission" : "reflectance";
      auto spec_it = params.find(spectral_param);
      if (spec_it == params.end())
        throw ParseError("material '" + name.text + "' needs \"spectrum " +
                             spectral_param + "\"",
                         name.line, name.col);
      mat.spectrum = spectrum_from_pairs(spec_it->second.second.numbers,
                                         spec_it->second.second.line, grid);
      if (auto it = params.find("retro_fraction"); it != params.end()) {
        if (it->second.second.numbers.size() != 1)
          throw ParseError("retro_fraction expects one float",
                           it->second.second.line);
        mat.retro_fraction = it->second.second.numbers[0];
      }
      if (auto it = params.find("sigma_retro_deg"); it != params.end()) {
        if (it->second.second.numbers.size() != 1)
          throw ParseError("sigma_retro_deg expects one float",
                           it->second.second.line);
        mat.sigma_retro_rad =
            it->second.second.numbers[0] * std::numbers::pi / 180.0;
      }
      try {
        mat.validate(name.text);
      } catch (const Error& e) {
        throw ParseError(e.what(), name.line, name.col);
      }
      asset.materials[name.text] = std::move(mat);
    } else if (d == "NamedMaterial") {
      Token name = lex.take();
      if (name.kind != Token::kString)
        throw ParseError("NamedMaterial expects a \"name\"", t.line, t.col);
      if (!asset.materials.count(name.text))
        throw ParseError("unknown material reference '" + name.text + "'",
                         name.line, name.col);
      stack.back().material = name.text;
    } else if (d == "Shape") {
      Token kind = lex.take();
      if (kind.kind != Token::kString || kind.text != "trianglemesh")
        throw ParseError("only Shape \"trianglemesh\" is supported", t.line,
                         t.col);
      if (stack.back().material.empty())
        throw ParseError("Shape without a NamedMaterial in scope", t.line,
                         t.col);
      auto params = parse_params(lex);
      auto p_it = params.find("P");
      auto i_it = params.find("indices");
      if (p_it == params.end())
        throw ParseError("trianglemesh needs \"point3 P\"", t.line, t.col);
      if (i_it == params.end())
        throw ParseError("trianglemesh needs \"integer indices\"", t.line,
                         t.col);
      const auto& pv = p_it->second.second;
      const auto& iv = i_it->second.second;
      if (pv.numbers.empty() || pv.numbers.size() % 3 != 0)
        throw ParseError("P must hold x y z triples", pv.line);
      if (iv.numbers.empty() || iv.numbers.size() % 3 != 0)
        throw ParseError("indices must hold index triples", iv.line);

      TriangleMesh mesh;
      const Eigen::Affine3d& ctm = stack.back().ctm;
      for (std::size_t i = 0; i < pv.numbers.size(); i += 3)
        mesh.vertices.push_back(
            ctm * Vec3(pv.numbers[i], pv.numbers[i + 1], pv.numbers[i + 2]));
      for (std::size_t i = 0; i < iv.numbers.size(); i += 3) {
        std::array<int, 3> tri;
        for (int k = 0; k < 3; ++k) {
          const double raw = iv.numbers[i + k];
          if (raw != std::floor(raw))
            throw ParseError("indices must be integers", iv.line);
          tri[k] = int(raw);
        }
        mesh.triangles.push_back(tri);
      }
      if (auto n_it = params.find("N"); n_it != params.end()) {
        const auto& nv = n_it->second.second;
        if (nv.numbers.size() != pv.numbers.size())
          throw ParseError("N must match P in length", nv.line);
        const Eigen::Matrix3d nrm_m =
            ctm.linear().inverse().transpose();
        for (std::size_t i = 0; i < nv.numbers.size(); i += 3)
          mesh.normals.push_back(
              (nrm_m * Vec3(nv.numbers[i], nv.numbers[i + 1],
                            nv.numbers[i + 2]))
                  .normalized());
      }
      try {
        mesh.validate();
      } catch (const Error& e) {
        throw ParseError(e.what(), t.line, t.col);
      }
      asset.meshes.emplace_back(std::move(mesh), stack.back().material);
    } else {
      throw ParseError("unrecognized directive '" + d + "'", t.line, t.col);
    }
  }

  if (stack.size() != 1)
    throw ParseError("unbalanced AttributeBegin", lex.peek().line);
  if (!saw_asset_decl)
    throw ParseError("missing Asset \"id\" \"class\" declaration", 1);

  for (const auto& [mesh, mat] : asset.meshes)
    for (const auto& v : mesh.vertices) asset.bounding_box.expand(v);
  asset.validate();
  return asset;
}

AssetDescription load_asset(const std::string& path,
                            const WavelengthGrid& grid) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open asset file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_asset(buf.str(), grid);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.col());
  }
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void write_spectrum(std::ostream& out, const Spectrum& s) {
  out << "[";
  for (int b = 0; b < s.grid.n_bands; ++b)
    out << (b ? " " : "") << fmt(s.grid.center_nm(b)) << " "
        << fmt(s.values[b]);
  out << "]";
}

}  // namespace

std::string serialize_asset(const AssetDescription& asset) {
  std::ostringstream out;
  out << "Asset \"" << asset.asset_id << "\" \""
      << to_string(asset.class_label) << "\"\n";
  for (const auto& [name, mat] : asset.materials) {
    out << "MakeNamedMaterial \"" << name << "\" \"string type\" [\"";
    switch (mat.kind) {
      case MaterialKind::diffuse: out << "diffuse"; break;
      case MaterialKind::retroreflective: out << "retroreflective"; break;
      case MaterialKind::emissive: out << "emissive"; break;
    }
    out << "\"]";
    out << " \"spectrum "
        << (mat.kind == MaterialKind::emissive ? "emission" : "reflectance")
        << "\" ";
    write_spectrum(out, mat.spectrum);
    if (mat.kind == MaterialKind::retroreflective) {
      out << " \"float retro_fraction\" [" << fmt(mat.retro_fraction) << "]";
      out << " \"float sigma_retro_deg\" ["
          << fmt(mat.sigma_retro_rad * 180.0 / std::numbers::pi) << "]";
    }
    out << "\n";
  }
  for (const auto& [mesh, material] : asset.meshes) {
    out << "AttributeBegin\n";
    out << "NamedMaterial \"" << material << "\"\n";
    out << "Shape \"trianglemesh\" \"point3 P\" [";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Vec3& v = mesh.vertices[i];
      out << (i ? " " : "") << fmt(v.x()) << " " << fmt(v.y()) << " "
          << fmt(v.z());
    }
    out << "] \"integer indices\" [";
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
      const auto& tri = mesh.triangles[i];
      out << (i ? " " : "") << tri[0] << " " << tri[1] << " " << tri[2];
    }
    out << "]";
    if (!mesh.normals.empty()) {
      out << " \"normal N\" [";
      for (std::size_t i = 0; i < mesh.normals.size(); ++i) {
        const Vec3& n = mesh.normals[i];
        out << (i ? " " : "") << fmt(n.x()) << " " << fmt(n.y()) << " "
            << fmt(n.z());
      }
      out << "]";
    }
    out << "\n";
    out << "AttributeEnd\n";
  }
  return out.str();
}

}  // namespace camsim
