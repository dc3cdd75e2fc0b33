# Keyed document store. Seeded from the "docs" parameter, whose keys are
# slash-separated paths; all(prefix) filters on the leading path component.


def create(env):
    store = env.types.table()
    for path, text in env.params.get("docs", {}).items():
        store[env.types.keypath(*path.split("/"))] = text

    class Documents:
        def find(self, keypath):
            if keypath not in store:
                raise LookupError("not found: " + repr(keypath))
            return store[keypath]

        def store(self, keypath, value):
            store[keypath] = value

        def discard(self, keypath):
            if keypath in store:
                del store[keypath]

        def empty(self):
            for key in list(store.keys()):
                del store[key]

        def all(self, prefix=None):
            out = env.types.table()
            for key, value in store.items():
                if prefix is None or key[0] == prefix:
                    out[key] = value
            return out

        def keys(self, prefix=None):
            return [k for k in store.keys() if prefix is None or k[0] == prefix]

    return Documents()
