#include <cotc/tasks.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace cotc;

TEST_CASE("modadd: prefix sums, label, hints") {
  // p=7; content checked via the recurrence rather than a
  // frozen draw; worked example: (3,5,6,=) -> label 0, CoT (3,1,0)
  TaskInstance worked;
  worked.tokens = {"3", "5", "6", "="};
  worked.cot = {"3", "1", "0"};
  worked.label = {"0"};
  worked.hints = {{1, "3"}, {2, "1"}, {3, "0"}};
  GeneratorConfig cfg;
  cfg.task = TaskKind::ModAdd;
  cfg.modulus = 7;
  cfg.length = 4;
  REQUIRE_FALSE(verify_task_instance(cfg, worked).has_value());

  TaskInstance bad = worked;
  bad.cot[1] = "2";
  REQUIRE(verify_task_instance(cfg, bad).has_value());

  TaskInstance inst = gen_modadd(7, 16, 42);
  cfg.length = 16;
  REQUIRE(inst.tokens.size() == 16);
  REQUIRE(inst.tokens.back() == "=");
  REQUIRE(inst.cot.size() == 15);
  REQUIRE(inst.hints.size() == 15);
  REQUIRE(inst.label.size() == 1);
  REQUIRE(inst.label[0] == inst.cot.back());
  REQUIRE_FALSE(verify_task_instance(cfg, inst).has_value());

  // all-zero input: label 0, CoT all zeros (p=2 keeps the draw space tiny)
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    TaskInstance z = gen_modadd(2, 5, seed);
    bool all_zero = true;
    for (std::size_t i = 0; i + 1 < z.tokens.size(); ++i) all_zero &= z.tokens[i] == "0";
    if (all_zero) {
      for (const auto& c : z.cot) REQUIRE(c == "0");
      REQUIRE(z.label[0] == "0");
    }
  }

  TaskInstance single = gen_modadd(7, 2, 3);
  REQUIRE(single.cot.size() == 1);
  REQUIRE(single.cot[0] == single.tokens[0]);  // identity prefix
  REQUIRE(single.label[0] == single.tokens[0]);
}

TEST_CASE("permcomp: composition recurrence and format") {
  GeneratorConfig cfg;
  cfg.task = TaskKind::PermComp;
  cfg.perm_size = 5;
  cfg.perm_count = 4;
  TaskInstance inst = gen_permcomp(5, 4, 7);
  REQUIRE(inst.tokens.size() == 7 * 4 + 1);
  REQUIRE(inst.cot.size() == 20);
  REQUIRE(inst.label.size() == 5);
  REQUIRE_FALSE(verify_task_instance(cfg, inst).has_value());

  // the block structure anchors hint t of block j at the position of the j-th
  // permutation's coordinate t
  auto perm_hints = [](const TaskInstance& t, std::size_t p, std::size_t m) {
    std::vector<std::pair<std::size_t, std::string>> hints;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < p; ++c)
        hints.emplace_back((p + 2) * j + 2 + c, t.cot[p * j + c]);
    return hints;
  };

  // sigma o pi = (sigma_{pi_1}, ...): worked example sigma1 = sigma2 = (2,3,1,4,5)
  TaskInstance manual;
  manual.tokens = {"(", "2", "3", "1", "4", "5", ")", "(", "2", "3", "1", "4", "5", ")", "="};
  manual.cot = {"2", "3", "1", "4", "5", "3", "1", "2", "4", "5"};
  manual.label = {"3", "1", "2", "4", "5"};
  manual.hints = perm_hints(manual, 5, 2);
  GeneratorConfig mcfg = cfg;
  mcfg.perm_count = 2;
  REQUIRE_FALSE(verify_task_instance(mcfg, manual).has_value());

  // composing with the identity keeps the partial composition
  TaskInstance ident;
  ident.tokens = {"(", "2", "1", "3", "4", "5", ")", "(", "1", "2", "3", "4", "5", ")", "="};
  ident.cot = {"2", "1", "3", "4", "5", "2", "1", "3", "4", "5"};
  ident.label = {"2", "1", "3", "4", "5"};
  ident.hints = perm_hints(ident, 5, 2);
  REQUIRE_FALSE(verify_task_instance(mcfg, ident).has_value());

  // a 3-cycle composed with itself three times returns to the identity
  TaskInstance cyc;
  cyc.tokens = {"(", "2", "3", "1", "4", "5", ")", "(", "2", "3", "1", "4", "5", ")",
                "(", "2", "3", "1", "4", "5", ")", "="};
  cyc.cot = {"2", "3", "1", "4", "5", "3", "1", "2", "4", "5", "1", "2", "3", "4", "5"};
  cyc.label = {"1", "2", "3", "4", "5"};
  cyc.hints = perm_hints(cyc, 5, 3);
  GeneratorConfig ccfg = cfg;
  ccfg.perm_count = 3;
  REQUIRE_FALSE(verify_task_instance(ccfg, cyc).has_value());

  // hint positions point at the permutation coordinates, never the parens
  for (const auto& [pos, tok] : inst.hints) {
    const std::string& input_tok = inst.tokens[pos - 1];
    REQUIRE(input_tok != "(");
    REQUIRE(input_tok != ")");
    REQUIRE(input_tok != "=");
    (void)tok;
  }
}

TEST_CASE("itersq: successive squares mod p") {
  GeneratorConfig cfg;
  cfg.task = TaskKind::IterSq;
  cfg.bound = 1000;
  cfg.max_squarings = 6;
  TaskInstance inst = gen_itersq(1000, 6, 99);
  REQUIRE_FALSE(verify_task_instance(cfg, inst).has_value());
  REQUIRE(inst.tokens[inst.tokens.size() - 1] == "=");
  REQUIRE(inst.cot.size() == inst.tokens.size() - 3);

  // worked example: p=5, r=2 -> 4, then 1
  TaskInstance two;
  two.tokens = {"5", "2", "^2", "^2", "="};
  two.cot = {"4", "1"};
  two.label = {"1"};
  two.hints = {{3, "4"}, {4, "1"}};
  REQUIRE_FALSE(verify_task_instance(cfg, two).has_value());
  TaskInstance one;
  one.tokens = {"5", "2", "^2", "="};
  one.cot = {"4"};
  one.label = {"4"};
  one.hints = {{3, "4"}};
  REQUIRE_FALSE(verify_task_instance(cfg, one).has_value());

  // r = 1 is a fixed point
  TaskInstance fix;
  fix.tokens = {"7", "1", "^2", "^2", "^2", "="};
  fix.cot = {"1", "1", "1"};
  fix.label = {"1"};
  fix.hints = {{3, "1"}, {4, "1"}, {5, "1"}};
  REQUIRE_FALSE(verify_task_instance(cfg, fix).has_value());

  // generated p is prime
  auto primes = taskdetail::primes_below(1000);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TaskInstance t = gen_itersq(1000, 3, seed);
    int p = std::stoi(t.tokens[0]);
    bool isprime = false;
    for (int q : primes) isprime |= q == p;
    REQUIRE(isprime);
  }
}

TEST_CASE("cvp: token format and re-evaluation") {
  GeneratorConfig cfg;
  cfg.task = TaskKind::Cvp;
  for (std::size_t m : {std::size_t{1}, std::size_t{2}, std::size_t{8}, std::size_t{20}}) {
    cfg.cvp_gates = m;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      TaskInstance inst = gen_cvp(m, seed);
      REQUIRE(inst.tokens.size() == 4 * m + 1);
      REQUIRE(inst.cot.size() == 4 * m);
      REQUIRE(inst.hints.size() == 4 * m);
      REQUIRE_FALSE(verify_task_instance(cfg, inst).has_value());
    }
  }

  // m=1: a lone constant gate is its own answer
  TaskInstance one = gen_cvp(1, 5);
  REQUIRE(one.tokens[1] == "NA");
  REQUIRE(one.tokens[2] == "NA");
  REQUIRE(one.tokens[3] == "1");
  REQUIRE(one.label[0] == one.tokens[0]);

  // hand-built example: (TRUE, NA, NA, 1)(NOT, 1, NA, 2) -> FALSE
  TaskInstance manual;
  manual.tokens = {"TRUE", "NA", "NA", "1", "NOT", "1", "NA", "2", "="};
  manual.cot = {"TRUE", "NA", "NA", "TRUE", "NOT", "TRUE", "NA", "FALSE"};
  manual.label = {"FALSE"};
  for (std::size_t i = 0; i < manual.cot.size(); ++i) manual.hints.emplace_back(i + 1, manual.cot[i]);
  cfg.cvp_gates = 2;
  REQUIRE_FALSE(verify_task_instance(cfg, manual).has_value());
  TaskInstance corrupted = manual;
  corrupted.cot[7] = "TRUE";
  REQUIRE(verify_task_instance(cfg, corrupted).has_value());
}

TEST_CASE("datasets: per-variant fields and byte-identical regeneration") {
  GeneratorConfig cfg;
  cfg.task = TaskKind::ModAdd;
  cfg.modulus = 7;
  cfg.length = 10;
  cfg.count = 50;
  cfg.seed = 12345;

  auto data = generate_dataset(cfg);
  REQUIRE(data.size() == 50);
  for (const auto& inst : data) REQUIRE_FALSE(verify_task_instance(cfg, inst).has_value());

  std::string base = serialize_dataset(data, DatasetVariant::Base, cfg);
  std::string cot = serialize_dataset(data, DatasetVariant::Cot, cfg);
  std::string hint = serialize_dataset(data, DatasetVariant::Hint, cfg);
  REQUIRE(base.substr(0, 2) == "# ");
  REQUIRE(base.find("\"label\"") != std::string::npos);
  REQUIRE(base.find("\"cot\"") == std::string::npos);
  REQUIRE(cot.find("\"cot\"") != std::string::npos);
  REQUIRE(cot.find("\"label\"") == std::string::npos);
  REQUIRE(hint.find("\"hints\"") != std::string::npos);

  // regeneration under the same seed is byte-identical
  auto again = generate_dataset(cfg);
  REQUIRE(serialize_dataset(again, DatasetVariant::Cot, cfg) == cot);

  // a different seed changes the content
  GeneratorConfig other = cfg;
  other.seed = 54321;
  REQUIRE(serialize_dataset(generate_dataset(other), DatasetVariant::Cot, other) != cot);

  // cross-variant consistency: every record's CoT tail equals the base label
  for (const auto& inst : data) {
    REQUIRE(inst.cot.back() == inst.label.back());
  }
}

TEST_CASE("generator argument validation") {
  REQUIRE_THROWS_AS(gen_modadd(1, 8, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_modadd(7, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_permcomp(5, 0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_itersq(3, 5, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_cvp(0, 0), std::invalid_argument);
}
