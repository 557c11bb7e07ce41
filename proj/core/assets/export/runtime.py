import argparse
import json
import math
import os
import re
import sys
import urllib.error
import urllib.request


class ChainError(Exception):
    pass


# -- values -----------------------------------------------------------------

_NUMBER_RE = re.compile(r"[ \t\n\r]*[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?[ \t\n\r]*")


def text(s):
    return ("text", s)


def number(d):
    d = float(d)
    if not math.isfinite(d):
        raise ChainError("arithmetic overflow: result is not finite")
    return ("number", 0.0 if d == 0 else d)


def boolean(b):
    return ("boolean", bool(b))


def format_number(d):
    if d == 0:
        return "0"
    if d.is_integer() and abs(d) < 1e16:
        return str(int(d))
    return repr(d)


def parse_number(s):
    if not _NUMBER_RE.fullmatch(s):
        return None
    d = float(s.strip(" \t\n\r"))
    if not math.isfinite(d):
        return None
    return 0.0 if d == 0 else d


def to_text(v):
    kind, payload = v
    if kind == "number":
        return format_number(payload)
    if kind == "boolean":
        return "true" if payload else "false"
    return payload


def coerce(v):
    kind, payload = v
    if kind == "number":
        return payload
    if kind == "text":
        return parse_number(payload)
    return None


def truthy(v):
    kind, payload = v
    if kind == "boolean":
        return payload
    if kind == "number":
        return payload != 0
    if kind == "text":
        return payload != ""
    return True


def value_from_json(j):
    if isinstance(j, bool):
        return boolean(j)
    if isinstance(j, (int, float)):
        return number(j)
    if isinstance(j, str):
        return text(j)
    kind = j["type"]
    if kind == "number":
        return number(j["value"])
    if kind == "boolean":
        return boolean(j["value"])
    return (kind, j["value"])


# -- expressions ------------------------------------------------------------

_KEYWORDS = {"and", "or", "not", "contains", "true", "false"}
_TOKEN_RE = re.compile(
    r"""(?P<space>[ \t\n\r]+)
      | (?P<number>(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>==|!=|<=|>=|<|>|\+|-)
      | (?P<lparen>\()
      | (?P<rparen>\))""",
    re.VERBOSE,
)


def _unescape(body, offset):
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            esc = body[i + 1]
            mapping = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
            if esc not in mapping:
                raise ChainError("expression syntax error at offset %d: unknown escape" % offset)
            out.append(mapping[esc])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def tokenize(src):
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ChainError("expression syntax error at offset %d" % pos)
        kind = m.lastgroup
        lexeme = m.group(kind)
        if kind == "word":
            toks.append(("keyword" if lexeme in _KEYWORDS else "ident", lexeme, pos))
        elif kind == "string":
            toks.append(("string", _unescape(lexeme[1:-1], pos), pos))
        elif kind != "space":
            toks.append((kind, lexeme, pos))
        pos = m.end()
    toks.append(("end", "", pos))
    return toks


class _Parser:
    def __init__(self, src):
        self.toks = tokenize(src)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def accept(self, kind, lexeme):
        t = self.peek()
        if t[0] == kind and t[1] == lexeme:
            self.pos += 1
            return True
        return False

    def fail(self, what):
        raise ChainError("expression syntax error at offset %d: %s" % (self.peek()[2], what))

    def parse(self):
        e = self.parse_or()
        if self.peek()[0] != "end":
            self.fail("unexpected '%s'" % self.peek()[1])
        return e

    def parse_or(self):
        lhs = self.parse_and()
        while self.accept("keyword", "or"):
            lhs = ("bin", "or", lhs, self.parse_and())
        return lhs

    def parse_and(self):
        lhs = self.parse_not()
        while self.accept("keyword", "and"):
            lhs = ("bin", "and", lhs, self.parse_not())
        return lhs

    def parse_not(self):
        if self.accept("keyword", "not"):
            return ("not", self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self):
        lhs = self.parse_add()
        t = self.peek()
        if (t[0] == "op" and t[1] not in ("+", "-")) or (t[0] == "keyword" and t[1] == "contains"):
            self.pos += 1
            return ("bin", t[1], lhs, self.parse_add())
        return lhs

    def parse_add(self):
        lhs = self.parse_primary()
        while self.accept("op", "+"):
            lhs = ("bin", "+", lhs, self.parse_primary())
        return lhs

    def literal_number(self, lexeme):
        d = parse_number(lexeme)
        if d is None:
            self.fail("number literal '%s' is out of range" % lexeme)
        return d

    def parse_primary(self):
        kind, lexeme, _ = self.peek()
        if kind == "number":
            self.pos += 1
            return ("lit", number(self.literal_number(lexeme)))
        if kind == "string":
            self.pos += 1
            return ("lit", text(lexeme))
        if kind == "ident":
            self.pos += 1
            return ("var", lexeme)
        if kind == "keyword" and lexeme in ("true", "false"):
            self.pos += 1
            return ("lit", boolean(lexeme == "true"))
        if kind == "lparen":
            self.pos += 1
            inner = self.parse_or()
            if not self.accept("rparen", ")"):
                self.fail("expected ')'")
            return inner
        if kind == "op" and lexeme == "-" and self.toks[self.pos + 1][0] == "number":
            self.pos += 2
            return ("lit", number(-self.literal_number(self.toks[self.pos - 1][1])))
        self.fail("unexpected end of expression" if kind == "end" else "unexpected '%s'" % lexeme)


def parse_expr(src):
    return _Parser(src).parse()


def expr_from_json(j):
    if isinstance(j, str):
        return parse_expr(j)
    if "lit" in j:
        return ("lit", value_from_json(j["lit"]))
    if "var" in j:
        return ("var", j["var"])
    if "not" in j:
        return ("not", expr_from_json(j["not"]))
    return ("bin", j["op"], expr_from_json(j["lhs"]), expr_from_json(j["rhs"]))


def _loose_equal(a, b):
    l, r = coerce(a), coerce(b)
    if l is not None and r is not None:
        return l == r
    return to_text(a) == to_text(b)


def eval_expr(env, e):
    tag = e[0]
    if tag == "lit":
        return e[1]
    if tag == "var":
        if e[1] not in env:
            raise ChainError("unbound variable '%s'" % e[1])
        return env[e[1]]
    if tag == "not":
        return boolean(not truthy(eval_expr(env, e[1])))
    _, op, lhs_e, rhs_e = e
    if op == "and":
        if not truthy(eval_expr(env, lhs_e)):
            return boolean(False)
        return boolean(truthy(eval_expr(env, rhs_e)))
    if op == "or":
        if truthy(eval_expr(env, lhs_e)):
            return boolean(True)
        return boolean(truthy(eval_expr(env, rhs_e)))
    lhs = eval_expr(env, lhs_e)
    rhs = eval_expr(env, rhs_e)
    if op == "==":
        return boolean(_loose_equal(lhs, rhs))
    if op == "!=":
        return boolean(not _loose_equal(lhs, rhs))
    if op in ("<", "<=", ">", ">="):
        l, r = coerce(lhs), coerce(rhs)
        if l is None or r is None:
            bad = rhs if l is not None else lhs
            raise ChainError("non-numeric operand to '%s': '%s'" % (op, to_text(bad)))
        return boolean({"<": l < r, "<=": l <= r, ">": l > r, ">=": l >= r}[op])
    if op == "+":
        l, r = coerce(lhs), coerce(rhs)
        if l is not None and r is not None:
            return number(l + r)
        return text(to_text(lhs) + to_text(rhs))
    if op == "contains":
        return boolean(to_text(rhs) in to_text(lhs))
    raise ChainError("unsupported operator '%s'" % op)


# -- prompts ----------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _scan(body, on_literal, on_name):
    i = 0
    run = 0
    n = len(body)
    while i < n:
        if not body.startswith("{{", i):
            i += 1
            continue
        on_literal(body[run:i])
        if body.startswith("{{{{", i):
            on_literal("{{")
            i += 4
            run = i
            continue
        close = body.find("}}", i + 2)
        if close < 0:
            raise ChainError("malformed placeholder at offset %d: unbalanced '{{'" % i)
        name = body[i + 2:close]
        if not _IDENT_RE.fullmatch(name):
            raise ChainError("malformed placeholder at offset %d: '%s' is not an identifier" % (i, name))
        on_name(name)
        i = close + 2
        run = i
    on_literal(body[run:])


def placeholders(bodies):
    out = []
    for body in bodies:
        _scan(body, lambda _: None, lambda name: out.append(name) if name not in out else None)
    return out


def render_bodies(bodies, bindings):
    parts = []
    for body in bodies:
        out = []

        def name(n):
            if n not in bindings:
                raise ChainError("unresolved placeholder '{{%s}}'" % n)
            out.append(to_text(bindings[n]))

        _scan(body, out.append, name)
        parts.append("".join(out))
    return "\n\n".join(parts)


def template_bodies(tpl):
    bodies = []
    for aspect in ("context", "instruction", "examples", "output_formatter"):
        body = tpl.get(aspect)
        if aspect == "instruction" or body:
            bodies.append(body or "")
    return bodies


# -- engines ----------------------------------------------------------------


class Engines:
    def __init__(self, configs, mock):
        self.configs = {c["name"]: c for c in configs}
        self.mock = mock

    def invoke(self, name, prompt):
        config = self.configs.get(name)
        if config is None:
            raise ChainError("unknown engine '%s'" % name)
        if not prompt:
            raise ChainError("engine '%s': empty prompt" % name)
        kind = config["kind"]
        if kind == "code-exec":
            try:
                return text(to_text(eval_expr({}, parse_expr(prompt))))
            except ChainError as e:
                raise ChainError("code-exec: %s" % e)
        if self.mock is not None:
            reply = self._scripted(prompt)
            if kind == "image":
                if not reply:
                    raise ChainError("image engine returned an empty reference")
                return ("image_ref", reply)
            return text(reply)
        if kind == "mock":
            raise ChainError("mock engine '%s': no script registered as '%s'"
                             % (name, config.get("mock_script_ref") or ""))
        return self._remote(config, prompt)

    def _scripted(self, prompt):
        for rule in self.mock.get("rules", []):
            if rule["match"] in prompt:
                return rule["response"]
        return self.mock["default"]

    def _remote(self, config, prompt):
        base = (config.get("endpoint") or "https://api.openai.com/v1").rstrip("/")
        params = config.get("params") or {}
        body = {"model": config["model_id"]}
        sampling = {
            "temperature": params.get("temperature", 1.0),
            "max_tokens": params.get("max_length", 512),
            "top_p": params.get("top_p", 1.0),
            "frequency_penalty": params.get("frequency_penalty", 0.0),
            "presence_penalty": params.get("presence_penalty", 0.0),
        }
        kind = config["kind"]
        if kind == "chat":
            url = base + "/chat/completions"
            body["messages"] = [{"role": "user", "content": prompt}]
            body.update(sampling)
        elif kind == "completion":
            url = base + "/completions"
            body["prompt"] = prompt
            body.update(sampling)
        else:
            url = base + "/images/generations"
            body["prompt"] = prompt
            body["n"] = 1
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.get("api_key_env") or "OPENAI_API_KEY")
        if key:
            headers["Authorization"] = "Bearer " + key
        req = urllib.request.Request(url, data=json.dumps(body).encode(), headers=headers)
        try:
            with urllib.request.urlopen(req, timeout=config.get("timeout_seconds", 60)) as resp:
                reply = json.loads(resp.read().decode())
        except urllib.error.HTTPError as e:
            raise ChainError("engine '%s': HTTP %d" % (config["name"], e.code))
        except (urllib.error.URLError, OSError) as e:
            raise ChainError("engine '%s': request failed (%s)" % (config["name"], e))
        if kind == "chat":
            return text(reply["choices"][0]["message"]["content"])
        if kind == "completion":
            return text(reply["choices"][0]["text"])
        item = reply["data"][0]
        return ("image_ref", item.get("url") or item["id"])


# -- interpreter ------------------------------------------------------------


class Runner:
    def __init__(self, project, engines, inputs, max_loop):
        self.prompts = {p["name"]: p for p in project.get("prompts", [])}
        self.engines = engines
        self.inputs = list(inputs)
        self.max_loop = max_loop
        self.env = {}
        for var in project.get("variables", []):
            self.env[var["name"]] = value_from_json(var.get("value", ""))

    def read_input(self, prompt_text):
        if self.inputs:
            return self.inputs.pop(0)
        sys.stderr.write(prompt_text + ": ")
        sys.stderr.flush()
        line = sys.stdin.readline()
        if not line:
            raise ChainError("input '%s' required but stdin is closed" % prompt_text)
        return line.rstrip("\n")

    def run_units(self, units):
        for u in units:
            if u.get("enabled", True):
                self.run_unit(u)

    def run_unit(self, u):
        kind = u["kind"]
        if kind == "worker":
            self.run_worker(u, False)
        elif kind == "output":
            if u["worker"].get("enabled", True):
                self.run_worker(u["worker"], True)
        elif kind == "container":
            self.run_units(u.get("preunits", []))
            self.run_units(u["units"])
        elif kind == "console_output":
            sys.stderr.write(to_text(eval_expr(self.env, expr_from_json(u["expr"]))) + "\n")
        elif kind == "assign":
            self.env[u["var"]] = eval_expr(self.env, expr_from_json(u["expr"]))
        elif kind == "if":
            branch = u["then"] if truthy(eval_expr(self.env, expr_from_json(u["cond"]))) else u.get("else", [])
            self.run_units(branch)
        elif kind == "while":
            cond = expr_from_json(u["cond"])
            count = 0
            while truthy(eval_expr(self.env, cond)):
                if count >= self.max_loop:
                    raise ChainError("while loop exceeded %d iterations" % self.max_loop)
                count += 1
                self.run_units(u["body"])
        elif kind == "for":
            start = self.bound(u["from"], "start")
            last = self.bound(u["to"], "end")
            count = 0
            current = start
            while current <= last:
                if count >= self.max_loop:
                    raise ChainError("for loop exceeded %d iterations" % self.max_loop)
                count += 1
                self.env[u["var"]] = number(current)
                current += 1
                self.run_units(u["body"])
        else:
            raise ChainError("unknown unit kind '%s'" % kind)

    def bound(self, e, which):
        v = eval_expr(self.env, expr_from_json(e))
        d = coerce(v)
        if d is None or not float(d).is_integer() or abs(d) > 9.0e15:
            raise ChainError("for-loop range %s '%s' is not an integer" % (which, to_text(v)))
        return int(d)

    def run_worker(self, w, to_output):
        inputs = []
        for pre in w.get("preworkers", []):
            kind = pre["kind"]
            if kind == "console_input":
                value = text(self.read_input(pre["prompt_text"]))
                self.env[pre["var"]] = value
                inputs.append((pre["var"], value))
            elif kind == "variable":
                if pre["name"] not in self.env:
                    raise ChainError("input '%s' is not bound" % pre["name"])
                inputs.append((pre["name"], self.env[pre["name"]]))
            elif pre.get("enabled", True):
                self.run_worker(pre, False)
                inputs.append((pre["name"], self.env[pre["name"]]))

        bindings = dict(self.env)
        for name, value in inputs:
            bindings[name] = value
        tpl = self.prompts.get(w["prompt"])
        if tpl is None:
            raise ChainError("unknown prompt '%s'" % w["prompt"])
        bodies = template_bodies(tpl)
        prompt = render_bodies(bodies, bindings)
        used = placeholders(bodies)
        for name, value in inputs:
            if name not in used:
                prompt += "\n" + name + ": " + to_text(value)

        result = self.engines.invoke(w["engine"], prompt)
        if to_output:
            sys.stdout.write(to_text(result) + "\n")
            sys.stdout.flush()
        self.env[w["name"]] = result


def main(project_json, argv=None):
    parser = argparse.ArgumentParser(description="Run the exported AI chain.")
    parser.add_argument("--mock", help="mock fixture JSON answering every model engine")
    parser.add_argument("--input", action="append", default=[], help="scripted console input")
    parser.add_argument("--max-loop", type=int, default=10000, help="loop iteration cap")
    args = parser.parse_args(argv)

    project = json.loads(project_json)
    mock = None
    if args.mock:
        with open(args.mock, encoding="utf-8") as f:
            mock = json.load(f)
    runner = Runner(project, Engines(project.get("engines", []), mock), args.input, args.max_loop)
    try:
        runner.run_units(project.get("chain", []))
    except ChainError as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    return 0
