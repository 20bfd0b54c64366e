// Copyright 2026 The asymdial Authors
// Licensed under the Apache License, Version 2.0

#include "asymdial/annotate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "asymdial/config.hpp"
#include "asymdial/error.hpp"

namespace asymdial {

namespace {

constexpr std::string_view kThoughtsOpen = "[inner_thoughts]";
constexpr std::string_view kThoughtsClose = "[/inner_thoughts]";
constexpr std::string_view kSatOpen = "[satisfaction]";
constexpr std::string_view kSatClose = "[/satisfaction]";
constexpr std::string_view kSatInline = "[satisfaction:";

constexpr std::array<std::string_view, 5> kMarkers = {kThoughtsOpen, kThoughtsClose, kSatOpen,
                                                      kSatClose, kSatInline};

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view lowered_prefix) {
  if (text.size() - pos < lowered_prefix.size()) return false;
  for (std::size_t i = 0; i < lowered_prefix.size(); ++i) {
    if (lower(text[pos + i]) != lowered_prefix[i]) return false;
  }
  return true;
}

std::size_t find_ci(std::string_view text, std::string_view lowered_needle, std::size_t from) {
  for (std::size_t i = from; i + lowered_needle.size() <= text.size(); ++i) {
    if (starts_with_ci(text, i, lowered_needle)) return i;
  }
  return std::string_view::npos;
}

// Position of the next tag marker or newline at or after `from`; bounds the
// body of a block whose closing tag is missing.
std::size_t unclosed_block_end(std::string_view text, std::size_t from) {
  std::size_t end = text.find('\n', from);
  if (end == std::string_view::npos) end = text.size();
  for (auto marker : kMarkers) {
    const std::size_t m = find_ci(text, marker, from);
    if (m != std::string_view::npos) end = std::min(end, m);
  }
  return end;
}

struct ScoreParse {
  bool ok = false;
  double score = 0.0;
  std::string explanation;
  bool clamped = false;
};

// "score - explanation"; separators '-', ':', ',' or a Unicode dash.
ScoreParse parse_score_text(std::string_view body) {
  ScoreParse out;
  const std::string text = trim(body);
  std::size_t pos = 0;
  if (pos < text.size() && text[pos] == '+') ++pos;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data() + pos || !std::isfinite(value)) return out;
  std::size_t rest = static_cast<std::size_t>(ptr - text.data());
  while (rest < text.size() && (text[rest] == ' ' || text[rest] == '\t')) ++rest;
  std::string_view tail = std::string_view(text).substr(rest);
  if (!tail.empty() && (tail.front() == '-' || tail.front() == ':' || tail.front() == ',')) {
    tail.remove_prefix(1);
  } else if (tail.starts_with("\xE2\x80\x93") || tail.starts_with("\xE2\x80\x94")) {
    tail.remove_prefix(3);  // en dash, em dash
  }
  out.ok = true;
  out.explanation = trim(tail);
  if (value < 0.0 || value > 1.0) {
    out.clamped = true;
    value = std::clamp(value, 0.0, 1.0);
  }
  out.score = value;
  return out;
}

}  // namespace

ParsedUserMessage parse_user_message(std::string_view raw) {
  ParsedUserMessage msg;
  bool have_thoughts = false;
  bool have_score = false;
  std::string visible;
  visible.reserve(raw.size());

  auto take_score = [&](std::string_view body) {
    ScoreParse sp = parse_score_text(body);
    if (!sp.ok) {
      msg.warnings.push_back("malformed satisfaction block ignored");
      return;
    }
    if (have_score) {
      msg.warnings.push_back("extra satisfaction block stripped");
      return;
    }
    have_score = true;
    msg.satisfaction_score = sp.score;
    msg.satisfaction_explanation = std::move(sp.explanation);
    if (sp.clamped) msg.warnings.push_back("satisfaction score clamped into [0,1]");
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != '[') {
      visible.push_back(raw[i++]);
      continue;
    }
    if (starts_with_ci(raw, i, kThoughtsOpen)) {
      const std::size_t body = i + kThoughtsOpen.size();
      std::size_t close = find_ci(raw, kThoughtsClose, body);
      std::size_t next;
      if (close == std::string_view::npos) {
        close = unclosed_block_end(raw, body);
        next = close;
        msg.warnings.push_back("unterminated inner thoughts block");
      } else {
        next = close + kThoughtsClose.size();
      }
      if (!have_thoughts) {
        have_thoughts = true;
        msg.inner_thoughts = trim(raw.substr(body, close - body));
      } else {
        msg.warnings.push_back("extra inner thoughts block stripped");
      }
      i = next;
    } else if (starts_with_ci(raw, i, kSatOpen)) {
      const std::size_t body = i + kSatOpen.size();
      std::size_t close = find_ci(raw, kSatClose, body);
      std::size_t next;
      if (close == std::string_view::npos) {
        close = unclosed_block_end(raw, body);
        next = close;
        msg.warnings.push_back("unterminated satisfaction block");
      } else {
        next = close + kSatClose.size();
      }
      take_score(raw.substr(body, close - body));
      i = next;
    } else if (starts_with_ci(raw, i, kSatInline)) {
      const std::size_t body = i + kSatInline.size();
      std::size_t close = raw.find(']', body);
      std::size_t next;
      if (close == std::string_view::npos) {
        close = unclosed_block_end(raw, body);
        next = close;
        msg.warnings.push_back("unterminated satisfaction block");
      } else {
        next = close + 1;
      }
      take_score(raw.substr(body, close - body));
      i = next;
    } else if (starts_with_ci(raw, i, kThoughtsClose)) {
      i += kThoughtsClose.size();
    } else if (starts_with_ci(raw, i, kSatClose)) {
      i += kSatClose.size();
    } else {
      visible.push_back(raw[i++]);
    }
  }

  msg.visible_text = trim(visible);
  msg.inner_thoughts_defaulted = !have_thoughts;
  msg.satisfaction_defaulted = !have_score;
  if (!have_score) {
    msg.satisfaction_score = kDefaultSatisfaction;
    msg.satisfaction_explanation.clear();
  }
  return msg;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

std::string serialize_user_message(const ParsedUserMessage& message) {
  std::string out;
  if (!message.inner_thoughts_defaulted) {
    out += "[INNER_THOUGHTS] " + message.inner_thoughts + " [/INNER_THOUGHTS]\n";
  }
  if (!message.satisfaction_defaulted) {
    out += "[SATISFACTION] " + format_number(message.satisfaction_score) + " - " +
           message.satisfaction_explanation + " [/SATISFACTION]\n";
  }
  out += message.visible_text;
  return out;
}

bool contains_tag_marker(std::string_view text) {
  for (auto marker : kMarkers) {
    if (find_ci(text, marker, 0) != std::string_view::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexicons

std::string_view to_string(LexiconKind kind) {
  switch (kind) {
    case LexiconKind::emotion: return "emotion";
    case LexiconKind::intent: return "intent";
    case LexiconKind::inner_emotion: return "inner_emotion";
    case LexiconKind::inner_intent: return "inner_intent";
  }
  return "unknown";
}

std::string normalize_for_matching(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::string_view rest = text.substr(i);
    if (rest.starts_with("\xE2\x80\x99") || rest.starts_with("\xE2\x80\x98")) {
      out.push_back('\'');  // typographic apostrophes
      i += 2;
    } else {
      out.push_back(lower(text[i]));
    }
  }
  return out;
}

namespace {

std::string label_from_heading(std::string_view heading) {
  std::string out;
  for (char c : trim(heading)) out.push_back(c == ' ' ? '_' : lower(c));
  return out;
}

}  // namespace

KeywordLexicon::KeywordLexicon(LexiconKind kind, std::vector<LexiconCategory> categories)
    : kind_(kind), categories_(std::move(categories)) {
  if (categories_.empty()) throw ConfigError("lexicon has no categories");
  for (auto& cat : categories_) {
    if (cat.label.empty()) throw ConfigError("lexicon category with empty label");
    if (cat.keywords.empty()) throw ConfigError("lexicon category '" + cat.label + "' is empty");
    for (auto& kw : cat.keywords) {
      kw = normalize_for_matching(kw);
      if (kw.empty()) throw ConfigError("lexicon category '" + cat.label + "' has an empty keyword");
    }
  }
}

std::string_view KeywordLexicon::fallback_label() const noexcept {
  return (kind_ == LexiconKind::emotion || kind_ == LexiconKind::inner_emotion) ? "neutral"
                                                                                 : "exploring";
}

KeywordLexicon KeywordLexicon::parse(LexiconKind kind, std::string_view text) {
  std::vector<LexiconCategory> cats;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.size() >= 2 && t.compare(t.size() - 2, 2, "\\\\") == 0) t = trim(t.substr(0, t.size() - 2));
    std::size_t sep = t.find('&');
    if (sep == std::string::npos) sep = t.find('|');
    if (sep == std::string::npos) sep = t.find(':');
    if (sep == std::string::npos) throw ConfigError("lexicon line without separator: " + t);
    LexiconCategory cat;
    cat.label = label_from_heading(t.substr(0, sep));
    cat.keywords = split_trimmed(std::string_view(t).substr(sep + 1), ',');
    cats.push_back(std::move(cat));
  }
  return KeywordLexicon(kind, std::move(cats));
}

KeywordLexicon KeywordLexicon::load(LexiconKind kind, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open lexicon file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(kind, ss.str());
}

namespace {

constexpr std::string_view kEmotionTable = R"(
Happy & happy, excited, great, wonderful, perfect, love, like, joy, pleased, delighted, thrilled, glad, enjoying, satisfied, positive
Frustrated & frustrated, annoyed, upset, angry, disappointed, not happy, irritated, bothered, fed up, aggravated, displeased, impatient, agitated, exasperated
Confused & confused, not sure, don't understand, unclear, complicated, puzzled, perplexed, lost, unsure, bewildered, disoriented, uncertain, ambiguous
Interested & interesting, tell me more, could you explain, how does, intrigued, curious, fascinated, engaged, captivated, keen, eager, want to know
Skeptical & really?, are you sure, is that true, not convinced, doubtful, suspicious, unconvinced, questioning, dubious, disbelieving, hard to believe
Neutral & okay, alright, fine, good, yes, no, sure, maybe, possibly, perhaps, hmm, i see, understood, noted
Anxious & worried, nervous, anxious, concerned, uneasy, apprehensive, stressed, tense, troubled, afraid, fearful, panicked, alarmed
Grateful & thank you, thanks, appreciate, grateful, thankful, indebted, obliged, appreciative, recognition, acknowledging, gratitude
Surprised & wow, oh, really, surprising, unexpected, shocked, amazed, astonished, startled, stunned, taken aback, incredible, unbelievable
Disappointed & disappointed, letdown, shame, too bad, unfortunate, regret, unsatisfactory, dismayed, disheartened, unfulfilled, discontented
Hopeful & hope, looking forward, anticipate, optimistic, excited about, expecting, anticipated, promising, encouraging, reassuring, positive outlook
)";

constexpr std::string_view kIntentTable = R"(
Exploring & looking for, interested in, tell me about, what are, show me, find, search for, discover, learn about, explain, describe, overview of, information on, curious about
Comparing & difference between, which is better, compare, versus, vs, pros and cons, advantages of, disadvantages of, similarities, contrasting, how does it compare, better choice, alternatives to
Deciding & should I, which one, recommend, suggestion, advise, what would you choose, best option, worth it, good choice, help me decide, make a decision, right for me, considering
Confirming & are you sure, is that right, does it have, can it, verify, confirm, is it true, really, actually, definitely, guarantee, promise, certain, double-check
Purchasing & how much, price, buy, purchase, cost, ordering, payment, discount, sale, shipping, availability, in stock, checkout, add to cart, where can I get
Leaving & thank you, goodbye, bye, see you, thanks, appreciate it, that's all, ending, finished, done, chat later, signing off, talk later
Troubleshooting & problem, issue, not working, error, fix, help me with, troubleshoot, broken, stuck, won't work, doesn't work, failed, bugs, glitches
Requesting & can you, could you, please, would you, need you to, want you to, help me, assist me, I'd like you to, request, favor
Expressing Satisfaction & great, awesome, perfect, excellent, wonderful, love it, satisfied, happy with, good job, well done, thanks, appreciate
Expressing Dissatisfaction & disappointed, unhappy, not satisfied, didn't work, not good, terrible, awful, frustrated, upset, not what I wanted, dislike
Inquiring & how do I, how to, steps to, guide for, tutorial, instructions, process of, way to, method for, approach to
Clarifying & what do you mean, don't understand, confused, unclear, elaborate, explain more, clarify, be more specific, meaning of, rephrase
)";

constexpr std::string_view kInnerIntentTable = R"(
Exploring & need information, want to know, curious, just browsing, researching, gathering info, learning, understand, figure out, not sure yet, looking into
Comparing & weighing options, pros and cons, better choice, similarities, differences, alternatives, compare, contrast, evaluation, weigh, prefer, which one is better
Deciding & almost ready, need to decide, make up my mind, making a choice, leaning towards, considering, thinking about getting, might choose, on the fence, close to deciding
Confirming & double-check, verify, make sure, confirm, reassurance, validate, certain, correct information, trust but verify, need proof, skeptical
Purchasing & ready to buy, want to purchase, where to buy, looking to get, willing to pay, budget, cost concerns, spend money, deal, bargain, checkout
Leaving & need to go, end this, wrap up, moving on, done here, finished, that's all I needed, got what I came for, time to leave, goodbye
Resisting & not telling everything, hiding my real goal, being vague on purpose, not revealing, keeping cards close, holding back, secretly want, actual intention, real reason
Testing & testing their knowledge, seeing if they know, checking competence, pushing to see response, challenging, probing, testing limits, seeing if capable
Manipulating & get them to, convince them, make them think, lead them to believe, appear as if, trick, misdirection, real agenda, hidden motive, strategic
Distrusting & don't believe, skeptical, not sure I trust, dubious, suspicious, questionable, doubt, can't trust, not convinced, wary of, hesitant
Regretting & should have asked, forgot to mention, didn't say, wish I had, too late now, missed opportunity, should have been clearer, miscommunicated, not what I meant
Hesitating & nervous about, afraid to ask, hesitant, uncertain, reluctant, apprehensive, can't decide, overthinking, worried, anxious, reservations
)";

constexpr std::string_view kInnerEmotionTable = R"(
Happy & happy inside, secretly pleased, actually like, genuinely excited, truly happy, satisfied with, enjoying this, pretty good, pleased, delighted
Frustrated & so annoying, ticks me off, irritating, getting on my nerves, frustrated with, tired of this, fed up, had enough, irritated, annoyed with
Confused & totally lost, no idea what, makes no sense, can't follow, hard to understand, over my head, confusing, complicated, don't get it, puzzled by
Interested & actually interested, curious about, want to know more, intriguing, grabbed my attention, need more details, fascinating, captivated by
Skeptical & don't believe, seems fishy, not buying it, doubt that, suspicious of, questioning, not convinced, seems too good, not trustworthy
Neutral & whatever, don't care, indifferent, not invested, no opinion, neutral on this, doesn't matter, makes no difference
Anxious & worried about, nervous that, anxiety, concerned, stressing me out, freaking out, panicking, on edge, uncomfortable, uneasy about
Impatient & hurry up, taking too long, waste of time, get to the point, move on, want this to be over, dragging on, drawn out, tedious
Insecure & not smart enough, look stupid, embarrassed, out of my depth, inadequate, incompetent, self-conscious, exposed, vulnerable, judged
Hopeful & fingers crossed, hope this works, maybe this will help, hoping for, optimistic, looking forward to, anticipating, excited for
Desperate & really need this, out of options, last resort, critical, urgent, dire, running out of time, no choice, have to make this work
Conflicted & torn between, mixed feelings, unsure which, conflicted about, ambivalent, on the fence, contradictory feelings, divided, split
Pretending & acting like, pretending to, faking, putting on a show, not showing how I feel, hiding my, masking my, concealing, not letting on
Resentful & unfair, not my fault, blame, resentful, bitter about, grudge, holding against, not forgetting, still angry about
)";

}  // namespace

const KeywordLexicon& default_lexicon(LexiconKind kind) {
  static const KeywordLexicon emotion = KeywordLexicon::parse(LexiconKind::emotion, kEmotionTable);
  static const KeywordLexicon intent = KeywordLexicon::parse(LexiconKind::intent, kIntentTable);
  static const KeywordLexicon inner_emotion =
      KeywordLexicon::parse(LexiconKind::inner_emotion, kInnerEmotionTable);
  static const KeywordLexicon inner_intent =
      KeywordLexicon::parse(LexiconKind::inner_intent, kInnerIntentTable);
  switch (kind) {
    case LexiconKind::emotion: return emotion;
    case LexiconKind::intent: return intent;
    case LexiconKind::inner_emotion: return inner_emotion;
    case LexiconKind::inner_intent: return inner_intent;
  }
  return emotion;
}

Classification classify(const KeywordLexicon& lexicon, std::string_view text) {
  const std::string hay = normalize_for_matching(text);
  Classification best{std::string(lexicon.fallback_label()), 0};
  for (const auto& cat : lexicon.categories()) {
    int count = 0;
    for (const auto& kw : cat.keywords) {
      if (hay.find(kw) != std::string::npos) ++count;
    }
    if (count > best.match_count) best = Classification{cat.label, count};
  }
  return best;
}

}  // namespace asymdial
