# Keyword search, second take: callers must now scope the search to a
# directory, so the port became binary.


def create(env):
    documents = env.port("documents")

    class Search:
        def perform(self, keyword, dir):
            count = 0
            for text in documents.all(dir).values():
                for token in text.split():
                    if token == keyword:
                        count += 1
            return count

    return Search()
