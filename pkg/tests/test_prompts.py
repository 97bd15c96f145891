import pytest

from capgen.prompts import (
    TemplateError,
    build_matrix,
    count_example_blocks,
    estimate_tokens,
    render_prompt,
)

from .study_reference import ONE_SHOT_PARITY_INPUT_TOKENS


def test_estimate_tokens_empty():
    assert estimate_tokens("") == 0


def test_estimate_tokens_heuristic():
    assert estimate_tokens("x" * 400) == 100
    assert estimate_tokens("x" * 401) == 101


def test_zero_shot_renders_no_example_blocks(corpus):
    inst = render_prompt(
        corpus.templates["zero-shot"], corpus.tbox_text, [],
        corpus.capabilities["C1"].description, capability_id="C1")
    assert count_example_blocks(inst.rendered_text) == 0
    assert corpus.tbox_text in inst.rendered_text
    assert corpus.capabilities["C1"].description in inst.rendered_text


def test_one_shot_contains_coffee_example(corpus):
    inst = render_prompt(
        corpus.templates["one-shot"], corpus.tbox_text, [corpus.examples["E1"]],
        corpus.capabilities["C1"].description, capability_id="C1")
    assert count_example_blocks(inst.rendered_text) == 1
    assert "coffee" in inst.rendered_text.lower()


def test_few_shot_examples_in_manifest_order(corpus):
    template = corpus.templates["few-shot"]
    assert template.example_ids == ("E1", "E3", "E2")
    assert template.example_ids == corpus.example_order
    pairs = [corpus.examples[eid] for eid in template.example_ids]
    inst = render_prompt(template, corpus.tbox_text, pairs, "task text")
    assert count_example_blocks(inst.rendered_text) == 3
    from capgen.prompts import EXAMPLE_BEGIN

    blocks = inst.rendered_text.split(EXAMPLE_BEGIN)[1:]
    assert "coffee" in blocks[0].lower()
    assert "distill" in blocks[1].split(EXAMPLE_BEGIN)[0].lower()
    assert "multipl" in blocks[2].lower()


def test_arity_mismatch_rejected(corpus):
    with pytest.raises(TemplateError):
        render_prompt(corpus.templates["one-shot"], corpus.tbox_text, [], "task")
    with pytest.raises(TemplateError):
        render_prompt(
            corpus.templates["zero-shot"], corpus.tbox_text,
            [corpus.examples["E1"]], "task")


def test_rendering_deterministic(corpus):
    args = (corpus.templates["few-shot"], corpus.tbox_text,
            [corpus.examples[e] for e in ("E1", "E3", "E2")], "same task")
    assert render_prompt(*args).rendered_text == render_prompt(*args).rendered_text


def test_matrix_cardinality(corpus):
    templates = [corpus.templates[t] for t in ("zero-shot", "one-shot", "few-shot")]
    caps = [c for c in corpus.ordered_capabilities() if c.is_study_target]
    matrix = build_matrix(caps, templates, corpus.tbox_text, corpus.examples)
    assert len(matrix) == 21
    keys = {(m.capability_id, m.technique) for m in matrix}
    assert len(keys) == 21
    # capability-major, technique-minor ordering
    assert [m.capability_id for m in matrix[:3]] == ["C1", "C1", "C1"]

    single = build_matrix(caps[:1], templates[:1], corpus.tbox_text, corpus.examples)
    assert len(single) == 1
    assert build_matrix([], templates, corpus.tbox_text, corpus.examples) == []


def test_one_shot_parity_token_estimate(corpus):
    inst = render_prompt(
        corpus.templates["one-shot"], corpus.tbox_text, [corpus.examples["E1"]],
        corpus.capabilities["C1"].description, capability_id="C1")
    low = ONE_SHOT_PARITY_INPUT_TOKENS * 0.8
    high = ONE_SHOT_PARITY_INPUT_TOKENS * 1.2
    assert low <= inst.token_estimate <= high


def test_containment_for_every_matrix_prompt(corpus):
    templates = [corpus.templates[t] for t in ("zero-shot", "one-shot", "few-shot")]
    caps = [c for c in corpus.ordered_capabilities() if c.is_study_target]
    for inst in build_matrix(caps, templates, corpus.tbox_text, corpus.examples):
        assert corpus.tbox_text in inst.rendered_text
        assert corpus.capabilities[inst.capability_id].description in inst.rendered_text
