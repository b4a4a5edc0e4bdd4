"""Shared scene-construction helper for the harness test suite."""

from scenegame.scene import SceneGraph, SceneObject


def make_scene(positions, **attrs):
    """Scene with default attributes; positions is a list of (x, y)."""
    objects = tuple(
        SceneObject(
            id=i,
            shape=attrs.get("shape", i % 3),
            color=attrs.get("color", i % 8),
            size=attrs.get("size", i % 2),
            material=attrs.get("material", i % 2),
            x=float(x),
            y=float(y),
        )
        for i, (x, y) in enumerate(positions)
    )
    return SceneGraph(objects=objects)
