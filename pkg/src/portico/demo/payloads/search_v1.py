# Keyword search, first take: scans every stored document.
# Counting rule: whitespace-delimited exact tokens, case-sensitive.


def create(env):
    documents = env.port("documents")

    class Search:
        def process(self, keyword):
            count = 0
            for text in documents.all().values():
                for token in text.split():
                    if token == keyword:
                        count += 1
            return count

    return Search()
