// src/synth.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "asrnoise/synth.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace asrnoise {

void SyntheticChannel::validate() const {
  auto check_prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string("channel: ") + what +
                                  " must be in [0,1]");
    }
  };
  check_prob(deletion_prob, "deletion_prob");
  check_prob(insertion_prob, "insertion_prob");
  for (const auto& [word, subs] : substitutions) {
    double mass = deletion_prob;
    for (const ChannelSub& s : subs) {
      check_prob(s.prob, "substitution prob");
      if (s.replacement == word) {
        throw std::invalid_argument("channel: self-substitution for " + word);
      }
      mass += s.prob;
    }
    if (mass > 1.0 + 1e-12) {
      throw std::invalid_argument("channel: event mass for '" + word +
                                  "' exceeds 1");
    }
  }
  if (insertion_prob > 0.0 && insertion_words.empty()) {
    throw std::invalid_argument("channel: insertion needs filler words");
  }
}

std::vector<std::string> SyntheticChannel::apply(
    const std::vector<std::string>& tokens, Rng& rng) const {
  std::vector<std::string> out;
  out.reserve(tokens.size() + 2);
  for (const std::string& token : tokens) {
    const double u = rng.uniform();
    if (u >= deletion_prob) {
      const auto it = substitutions.find(token);
      double mass = 0.0;
      if (it != substitutions.end()) {
        for (const ChannelSub& s : it->second) mass += s.prob;
      }
      if (it != substitutions.end() && u < deletion_prob + mass) {
        const double v = rng.uniform() * mass;
        double cum = 0.0;
        const std::string* pick = &it->second.back().replacement;
        for (const ChannelSub& s : it->second) {
          cum += s.prob;
          if (v < cum) {
            pick = &s.replacement;
            break;
          }
        }
        if (!pick->empty()) out.push_back(*pick);  // empty = word dropped
      } else {
        out.push_back(token);
      }
    }
    if (insertion_prob > 0.0 && rng.uniform() < insertion_prob) {
      out.push_back(insertion_words[rng.uniform_index(insertion_words.size())]);
    }
  }
  return out;
}

std::string SyntheticChannel::apply_text(std::string_view text,
                                         Rng& rng) const {
  return join_tokens(apply(tokenize(text), rng));
}

std::string SyntheticChannel::to_json() const {
  nlohmann::ordered_json j;
  j["deletion_prob"] = deletion_prob;
  j["insertion_prob"] = insertion_prob;
  j["insertion_words"] = insertion_words;
  nlohmann::ordered_json subs = nlohmann::ordered_json::object();
  std::vector<std::string> words;
  for (const auto& [word, list] : substitutions) words.push_back(word);
  std::sort(words.begin(), words.end());
  for (const std::string& word : words) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const ChannelSub& s : substitutions.at(word)) {
      entries.push_back({{"replacement", s.replacement}, {"prob", s.prob}});
    }
    subs[word] = entries;
  }
  j["substitutions"] = subs;
  return j.dump(2);
}

SyntheticChannel SyntheticChannel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SyntheticChannel channel;
  channel.deletion_prob = j.at("deletion_prob").get<double>();
  channel.insertion_prob = j.at("insertion_prob").get<double>();
  channel.insertion_words =
      j.at("insertion_words").get<std::vector<std::string>>();
  for (const auto& [word, entries] : j.at("substitutions").items()) {
    std::vector<ChannelSub>& list = channel.substitutions[word];
    for (const auto& entry : entries) {
      list.push_back({entry.at("replacement").get<std::string>(),
                      entry.at("prob").get<double>()});
    }
  }
  channel.validate();
  return channel;
}

LabeledExample SentenceTemplates::sample(Rng& rng) const {
  const Intent& intent = intents[rng.uniform_index(intents.size())];
  const std::string& pattern =
      intent.patterns[rng.uniform_index(intent.patterns.size())];
  std::vector<std::string> tokens;
  for (const std::string& tok : tokenize(pattern, {false, false})) {
    if (tok.size() >= 2 && tok.front() == '{' && tok.back() == '}') {
      const std::string slot = tok.substr(1, tok.size() - 2);
      const auto it = slots.find(slot);
      if (it == slots.end() || it->second.empty()) {
        throw std::invalid_argument("templates: unknown slot {" + slot + "}");
      }
      tokens.push_back(it->second[rng.uniform_index(it->second.size())]);
    } else {
      tokens.push_back(tok);
    }
  }
  return {join_tokens(tokens), {intent.name}};
}

std::vector<std::string> SentenceTemplates::vocabulary() const {
  std::set<std::string> words;
  for (const Intent& intent : intents) {
    for (const std::string& pattern : intent.patterns) {
      for (const std::string& tok : tokenize(pattern, {false, false})) {
        if (tok.size() >= 2 && tok.front() == '{' && tok.back() == '}') {
          for (const std::string& w : slots.at(tok.substr(1, tok.size() - 2))) {
            words.insert(w);
          }
        } else {
          words.insert(tok);
        }
      }
    }
  }
  return {words.begin(), words.end()};
}

SynthBenchmark make_synthetic_benchmark(
    const SyntheticChannel& channel, const SentenceTemplates& templates,
    const SynthSizes& sizes, Rng& rng,
    const SentenceTemplates* pair_templates) {
  channel.validate();
  if (templates.intents.empty()) {
    throw std::invalid_argument("templates: no intents");
  }
  SynthBenchmark bench;

  // Speech-corpus side: keep only pairs the channel actually corrupted,
  // mirroring the exact-match filter of pair collection. With a second
  // domain, the corpus mixes narration and command-style utterances evenly,
  // the way read-speech corpora do.
  long long attempts = 0;
  const long long max_attempts = 20LL * std::max(1, sizes.n_pairs);
  while (static_cast<int>(bench.pairs.size()) < sizes.n_pairs &&
         attempts < max_attempts) {
    ++attempts;
    const SentenceTemplates& domain =
        (pair_templates != nullptr && rng.uniform() < 0.5) ? *pair_templates
                                                           : templates;
    const LabeledExample ex = domain.sample(rng);
    const std::string noisy = channel.apply_text(ex.text, rng);
    if (tokenize(noisy) == tokenize(ex.text)) continue;
    bench.pairs.push_back({ex.text, noisy});
  }

  auto draw_split = [&](int n, std::vector<LabeledExample>& out) {
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(templates.sample(rng));
  };
  draw_split(sizes.n_train, bench.train);
  draw_split(sizes.n_dev, bench.dev);
  draw_split(sizes.n_test, bench.test);

  bench.noisy_test.reserve(bench.test.size());
  for (const LabeledExample& ex : bench.test) {
    bench.noisy_test.push_back({channel.apply_text(ex.text, rng), ex.labels});
  }
  return bench;
}

SyntheticChannel default_channel() {
  SyntheticChannel ch;
  ch.deletion_prob = 0.03;
  ch.insertion_prob = 0.08;
  ch.insertion_words = {"uh", "um", "the", "a"};
  // Short grammatical words vanish far more often than their counterparts;
  // the per-word rates are deliberately uneven so a fixed substitution
  // proportion cannot reproduce the error distribution.
  ch.substitutions = {
      {"play", {{"pray", 0.25}, {"clay", 0.15}, {"", 0.07}}},
      {"stop", {{"top", 0.22}, {"shop", 0.13}, {"", 0.03}}},
      {"lights", {{"likes", 0.20}, {"nights", 0.13}, {"", 0.05}}},
      {"lamp", {{"lamb", 0.18}, {"ramp", 0.12}}},
      {"on", {{"own", 0.30}, {"in", 0.25}, {"", 0.16}}},
      {"off", {{"of", 0.08}, {"", 0.10}}},
      {"alarm", {{"arm", 0.25}}},
      {"cancel", {{"council", 0.08}, {"candle", 0.05}, {"", 0.09}}},
      {"weather", {{"whether", 0.06}, {"", 0.08}}},
      {"time", {{"dime", 0.30}, {"", 0.13}}},
      {"set", {{"sat", 0.18}, {"said", 0.12}, {"", 0.14}}},
      {"wake", {{"lake", 0.18}, {"week", 0.10}}},
      {"turn", {{"torn", 0.12}, {"town", 0.08}}},
      {"switch", {{"which", 0.18}}},
      {"rain", {{"train", 0.15}, {"ran", 0.10}}},
      {"morning", {{"warning", 0.15}}},
      {"evening", {{"even", 0.12}}},
      {"song", {{"sung", 0.15}}},
      {"songs", {{"sons", 0.15}}},
      {"down", {{"town", 0.15}}},
      {"silence", {{"science", 0.20}}},
      {"tell", {{"till", 0.15}}},
      {"hear", {{"here", 0.20}}},
      {"want", {{"won't", 0.15}}},
      {"what", {{"but", 0.08}}},
      {"the", {{"a", 0.08}}},
  };
  return ch;
}

SentenceTemplates default_templates() {
  SentenceTemplates t;
  t.slots = {
      {"genre", {"jazz", "rock", "country", "blues", "folk"}},
      {"room", {"kitchen", "bedroom", "garage", "office", "hall"}},
      {"hour", {"six", "seven", "eight", "nine", "ten"}},
      {"daypart", {"morning", "evening"}},
      {"city", {"boston", "denver", "dallas", "phoenix", "portland"}},
  };
  t.intents = {
      {"play_music",
       {"play some {genre} music", "play the next song",
        "put on {genre} music please", "i want to hear some {genre}",
        "play my favorite {genre} songs"}},
      {"stop_music",
       {"stop the music", "stop playing songs", "turn the music down",
        "please stop the song", "silence the music now"}},
      {"lights_on",
       {"turn on the {room} lights", "switch on the lamp in the {room}",
        "lights on in the {room}", "make the {room} brighter",
        "turn the {room} lamp on"}},
      {"lights_off",
       {"turn off the {room} lights", "switch off the lamp in the {room}",
        "lights off in the {room}", "make the {room} darker",
        "turn the {room} lamp off"}},
      {"set_alarm",
       {"set an alarm for {hour} in the {daypart}", "wake me at {hour}",
        "set the alarm to {hour}", "set the alarm now",
        "i need an alarm at {hour} in the {daypart}"}},
      {"cancel_alarm",
       {"cancel the alarm", "cancel the alarm now", "cancel my {hour} alarm",
        "remove the alarm for {hour}", "no alarm tomorrow please"}},
      {"weather_query",
       {"what is the weather like today", "will it rain tomorrow",
        "how cold is it outside", "what is the weather in {city}",
        "is it sunny outside today"}},
      {"time_query",
       {"what time is it", "tell me the time", "what is the time in {city}",
        "do you have the time"}},
  };
  return t;
}

SentenceTemplates default_pair_templates() {
  SentenceTemplates t;
  t.slots = default_templates().slots;
  t.intents = {
      {"narration",
       {
           "he will play the song again",
           "she wants to hear some {genre}",
           "they play {genre} music in the evening",
           "we stop at the top of the hall",
           "the lights in the garage are off",
           "the lamp in the bedroom is on",
           "turn down the music after the song",
           "he will set the alarm for {hour}",
           "she will cancel the alarm in the morning",
           "i wake at {hour} every morning",
           "the weather in {city} is cold today",
           "he will tell you the time in {city}",
           "there was rain in {city} this morning",
           "switch the lamp off in the evening",
           "the song was on again this morning",
           "we want silence in the office now",
           "she told me what the weather was",
           "they hear the rain on the roof",
           "turn the lights on when it is dark",
           "the alarm will stop after ten",
           "play it again in the {room}",
           "he sat down to hear the songs",
           "set the time to {hour} in the evening",
           "i want to see the {city} weather",
           "stop the alarm please",
           "the morning train was on time",
           "down by the lake in the evening",
           "cancel every song after this one",
           "do you have the time now",
           "i need to put the lamp there",
           "it will be sunny outside tomorrow",
           "how cold is it outside today",
           "make the office brighter please",
           "the bedroom is darker now",
           "is this my favorite song",
           "the next train is at {hour}",
           "no music after ten please",
           "remove the lamp by the lake",
           "we need an alarm at {hour}",
           "they like the blues songs",
           "they are playing {genre} in the hall",
           "can you tell me the weather",
       }},
  };
  return t;
}

}  // namespace asrnoise
