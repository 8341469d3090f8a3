def flatten(items):
    for item in items:
        if isinstance(item, (list, tuple)) and not isinstance(item, str):
            yield from flatten(item)
        else:
            yield item
