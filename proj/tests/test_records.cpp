#include <doctest.h>

#include <filesystem>

#include "toruslab/records.hpp"

using namespace toruslab;
using namespace toruslab::records;

TEST_CASE("config hash is canonical and order independent") {
  json a = {{"alpha", 1}, {"beta", 2.5}, {"gamma", "x"}};
  json b;
  b["gamma"] = "x";
  b["beta"] = 2.5;
  b["alpha"] = 1;
  CHECK(config_hash(a) == config_hash(b));
  json c = a;
  c["alpha"] = 2;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("record stream round trips and refuses mixed configs") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "toruslab_rectest";
  fs::create_directories(dir);
  std::string path = (dir / "rows.jsonl").string();

  survey::SurveyRow r1 = survey::survey_enumerate(2, 3);
  {
    RecordWriter w(path, "deadbeefdeadbeef");
    w.emit("survey_row", survey_row_json(r1));
    w.emit("decay_fit", json{{"note", "ignored by the loader"}});
  }
  auto rows = load_survey_rows(path, "deadbeefdeadbeef");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].T == r1.T);
  CHECK(rows[0].n_total == r1.n_total);
  CHECK(rows[0].fail_fraction == r1.fail_fraction);

  CHECK_THROWS_AS(load_survey_rows(path, "0000000000000000"), parse_error);
}

TEST_CASE("records are byte-identical across reruns") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "toruslab_rectest";
  fs::create_directories(dir);
  auto write_once = [&](const std::string& name) {
    std::string path = (dir / name).string();
    RecordWriter w(path, "cafecafecafecafe");
    w.emit("survey_row", survey_row_json(survey::survey_sample(3, 40, 50, 5)));
    algebra::IntMatrix cat(2, {big_int(2), big_int(1), big_int(1), big_int(1)});
    w.emit("hypothesis_report", hypothesis_json(algebra::check_hypotheses(cat)));
    return path;
  };
  std::string p1 = write_once("a.jsonl"), p2 = write_once("b.jsonl");
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(s1.find("\"record\":\"hypothesis_report\"") != std::string::npos);
}
