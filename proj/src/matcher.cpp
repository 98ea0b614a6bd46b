#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"
#include "castkit/parallel.hpp"

namespace castkit::fruits {

std::vector<double> EmbeddingMatcher::match(std::span<const MatchRequest> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& req : batch)
    out.push_back(cosine_similarity(corpus_.embedding(req.pair.a),
                                    corpus_.embedding(req.pair.b)));
  return out;
}

std::vector<double> SleepMatcher::match(std::span<const MatchRequest> batch) {
  std::this_thread::sleep_for(delay_);
  return std::vector<double>(batch.size(), 0.0);
}

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> argv;
  std::string token;
  while (in >> token) argv.push_back(token);
  return argv;
}

ExternalMatcher::ExternalMatcher(std::vector<std::string> argv,
                                 std::filesystem::path work_dir,
                                 std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), work_dir_(std::move(work_dir)), timeout_(timeout) {
  if (argv_.empty()) throw MatcherError("external matcher command is empty");
  std::filesystem::create_directories(work_dir_);
}

std::vector<double> ExternalMatcher::match(std::span<const MatchRequest> batch) {
  const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(calls_++);
  const auto pairs_path = work_dir_ / ("pairs_" + tag + ".tsv");
  const auto scores_path = work_dir_ / ("scores_" + tag + ".txt");
  {
    std::ofstream out(pairs_path, std::ios::binary | std::ios::trunc);
    if (!out) throw MatcherError(pairs_path.string() + ": cannot write pair list");
    for (const auto& req : batch)
      out << req.pair.a.value << '\t' << req.pair.b.value << '\n';
  }

  std::vector<std::string> args = argv_;
  args.push_back(pairs_path.string());
  args.push_back(scores_path.string());
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  cargs.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw MatcherError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::execvp(cargs[0], cargs.data());
    ::_exit(127);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) throw MatcherError("waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      std::filesystem::remove(pairs_path);
      std::filesystem::remove(scores_path);
      throw MatcherError("external matcher '" + argv_[0] + "' timed out after " +
                         std::to_string(timeout_.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::microseconds(100));
  }
  std::filesystem::remove(pairs_path);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::filesystem::remove(scores_path);
    throw MatcherError("external matcher '" + argv_[0] + "' failed with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }

  std::vector<double> scores;
  {
    std::ifstream in(scores_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        scores.push_back(std::stod(line));
      } catch (const std::exception&) {
        throw MatcherError("external matcher wrote a non-numeric score '" + line + "'");
      }
    }
  }
  std::filesystem::remove(scores_path);
  if (scores.size() != batch.size())
    throw MatcherError("external matcher returned " + std::to_string(scores.size()) +
                       " scores for " + std::to_string(batch.size()) + " pairs");
  return scores;
}

ScoreSet score_protocol(const PairProtocol& protocol, Matcher& matcher,
                        std::size_t batch_size) {
  auto run = [&](const std::vector<FacePair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    std::vector<MatchRequest> batch;
    for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
      batch.clear();
      const std::size_t end = std::min(pairs.size(), start + batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back({pairs[i], false});
      const auto scores = matcher.match(batch);
      if (scores.size() != batch.size())
        throw MatcherError("matcher returned the wrong number of scores");
      out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
  };
  return {run(protocol.genuine_pairs), run(protocol.impostor_pairs)};
}

ScoreSet score_protocol(const PairProtocol& protocol, const Corpus& corpus,
                        std::size_t workers) {
  constexpr std::size_t kBlock = 8192;
  auto run = [&](const std::vector<FacePair>& pairs) {
    std::vector<double> out(pairs.size());
    const std::size_t blocks = (pairs.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t end = std::min(pairs.size(), (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i)
        out[i] = cosine_similarity(corpus.embedding(pairs[i].a),
                                   corpus.embedding(pairs[i].b));
    });
    return out;
  };
  return {run(protocol.genuine_pairs), run(protocol.impostor_pairs)};
}

}  // namespace castkit::fruits
