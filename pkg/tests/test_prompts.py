import pytest

from argrecon.errors import ConfigError
from argrecon.prompts import STAGES, PromptTemplate, load_template


@pytest.mark.parametrize("stage", STAGES)
def test_bundled_templates_load_and_render(stage):
    t = load_template(stage)
    system, user = t.render(text="TEXT", components="C", target="T", candidates="K",
                            component="X", supporters="S", premises="P", attack="A",
                            inferences="I")
    assert system and "TEXT" in user
    assert "{" not in user.replace("{name}", "")


def test_override_directory_wins(tmp_path):
    (tmp_path / "conclusion.txt").write_text("# comment\nSYS\n---\nPick one of {components}\n")
    t = load_template("conclusion", tmp_path)
    assert t.render(components="1. a") == ("SYS", "Pick one of 1. a")
    # stages missing from the override directory fall back to the bundled copy
    assert load_template("merge", tmp_path) == load_template("merge")


def test_unknown_placeholders_are_left_alone():
    t = PromptTemplate("x", "s", "json like {\"a\": 1} and {text}")
    assert t.render(text="T")[1] == "json like {\"a\": 1} and T"


def test_malformed_templates():
    with pytest.raises(ConfigError):
        PromptTemplate.parse("x", "no separator here")
    with pytest.raises(ConfigError):
        PromptTemplate.parse("x", "---\nuser only")
    with pytest.raises(ConfigError):
        load_template("nonexistent")
